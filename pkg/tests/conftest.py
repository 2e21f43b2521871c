import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from fuselage.compiler import compile_file

ASSET = (
    pathlib.Path(__file__).resolve().parents[1]
    / "src"
    / "fuselage"
    / "assets"
    / "mask.story"
)


@pytest.fixture(scope="session")
def mask_graph():
    result = compile_file(ASSET)
    assert result.graph is not None, [d.render() for d in result.diagnostics]
    assert not result.diagnostics
    return result.graph


@pytest.fixture(scope="session")
def mask_path():
    return ASSET
