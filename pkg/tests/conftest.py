import json
from pathlib import Path

import pytest

from odcb.botgen import generate_bot
from odcb.importers import SocrataDescriptor, import_socrata
from odcb.refine import apply_script

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SOCRATA_DIR = FIXTURES / "socrata" / "uy6k-2s8r"
CKAN_DIR = FIXTURES / "ckan" / "air-stations"


def load_json(path: Path):
    return json.loads(path.read_text("utf-8"))


@pytest.fixture(scope="session")
def socrata_descriptor() -> SocrataDescriptor:
    return SocrataDescriptor(
        metadata_doc=load_json(SOCRATA_DIR / "metadata.json"),
        views_doc=load_json(SOCRATA_DIR / "views.json"),
        domain="analisi.transparenciacatalunya.cat",
        dataset_id="uy6k-2s8r",
    )


@pytest.fixture(scope="session")
def imported_model(socrata_descriptor):
    return import_socrata(socrata_descriptor)


@pytest.fixture(scope="session")
def refined_model(imported_model):
    script = load_json(SOCRATA_DIR / "refinements.json")
    return apply_script(imported_model, script)


@pytest.fixture(scope="session")
def bot(refined_model):
    return generate_bot(refined_model)


@pytest.fixture(scope="session")
def fixture_rows():
    return load_json(SOCRATA_DIR / "rows.json")
