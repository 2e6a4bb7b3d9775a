import sys
from pathlib import Path

try:
    import presh  # noqa: F401
except ImportError:  # running from a checkout without installing
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
    import presh  # noqa: F401

import pytest

from presh.cli import execute
from presh.dsl import parse_model, parse_workspace_file


DATA = Path(presh.__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


def _load(name: str):
    return parse_model((DATA / name).read_text(), source=name)


@pytest.fixture(scope="session")
def org_model():
    return _load("organization.psh")


@pytest.fixture(scope="session")
def wine_model():
    return _load("wine.psh")


@pytest.fixture(scope="session")
def pc_model():
    return _load("pc.psh")


@pytest.fixture(scope="session")
def camcorder_model():
    return _load("camcorder.psh")


@pytest.fixture(scope="session")
def itunes_model():
    return _load("itunes.psh")


@pytest.fixture(scope="session")
def hub_workspace():
    return parse_workspace_file(DATA / "digital_hub.pshw")


@pytest.fixture(scope="session")
def hub(hub_workspace):
    return execute(hub_workspace, max_enum=10**6)
