#!/usr/bin/env python3
"""End-to-end demo: import -> refine -> generate -> chat, fully offline.

Builds model.json and bot.json under build/ from the bundled air-quality
fixture, then replays the guided conversation against the local mock API
and prints the transcript.
"""

import json
import sys
from datetime import date
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from odcb.botgen import bot_dumps, generate_bot  # noqa: E402
from odcb.importers import SocrataDescriptor, import_socrata  # noqa: E402
from odcb.model import dumps  # noqa: E402
from odcb.refine import apply_script  # noqa: E402
from odcb.runtime import MockOpenDataServer, RebasedTransport, create_session, handle_message  # noqa: E402

FIXTURE = ROOT / "fixtures" / "socrata" / "uy6k-2s8r"

DIALOGUE = [
    "show me the list of air quality data",
    "date",
    "equals",
    "yesterday",
    "I don't want to add filters",
    "municipality",
    "magnitude",
    "I don't want to add fields",
    "sort by magnitude desc",
    "calculate average of magnitude",
    "show me next page",
]


def main() -> None:
    build = ROOT / "build"
    build.mkdir(exist_ok=True)

    descriptor = SocrataDescriptor(
        metadata_doc=json.loads((FIXTURE / "metadata.json").read_text()),
        views_doc=json.loads((FIXTURE / "views.json").read_text()),
        domain="analisi.transparenciacatalunya.cat",
        dataset_id="uy6k-2s8r",
    )
    model = import_socrata(descriptor)
    (build / "model.json").write_text(dumps(model), "utf-8")

    refined = apply_script(model, json.loads((FIXTURE / "refinements.json").read_text()))
    (build / "model.refined.json").write_text(dumps(refined), "utf-8")

    bot = generate_bot(refined)
    (build / "bot.json").write_text(bot_dumps(bot), "utf-8")
    print(f"wrote {build / 'model.json'}, {build / 'model.refined.json'}, {build / 'bot.json'}\n")

    with MockOpenDataServer(ROOT / "fixtures") as mock:
        transport = RebasedTransport(mock.base_url)
        session = create_session(bot)
        today = date(2020, 6, 16)  # fixture rows cover 2020-06-13..15
        for text in DIALOGUE:
            session, response = handle_message(bot, session, text, today=today, transport=transport)
            print(f"you> {text}")
            for message in response.messages:
                print(f"bot> {message}")
            if response.table is not None:
                print(f"     {response.table.headers}")
                for row in response.table.rows:
                    print(f"     {row}")
            print()


if __name__ == "__main__":
    main()
