import pathlib

import pytest

import qfm

REPO = pathlib.Path(__file__).resolve().parent.parent
SAMPLES = REPO / "samples"
GOLDEN = pathlib.Path(__file__).resolve().parent / "golden"


def load(name: str) -> qfm.FeatureModel:
    path = SAMPLES / name
    result = qfm.parse_model(path.read_text(encoding="utf-8"), str(path))
    assert isinstance(result, qfm.FeatureModel), qfm.format_diagnostics(result)
    return result


@pytest.fixture(scope="session")
def classification() -> qfm.FeatureModel:
    return load("classification.qfm")


@pytest.fixture(scope="session")
def skeleton() -> qfm.FeatureModel:
    return load("skeleton.qfm")


@pytest.fixture(scope="session")
def sample_paths() -> list[pathlib.Path]:
    paths = sorted(SAMPLES.glob("*.qfm"))
    assert len(paths) >= 10
    return paths
