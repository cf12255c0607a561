"""odcb: import Open Data API descriptions, generate chatbots, run them.

Pipeline: importers -> refine -> botgen -> nlu + runtime, driven by the CLI.
"""

__version__ = "0.1.0"
