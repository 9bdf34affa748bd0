import pathlib

import pytest

SPECS_DIR = pathlib.Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture(scope="session")
def specs_dir() -> pathlib.Path:
    return SPECS_DIR


@pytest.fixture(scope="session")
def appendix_model_source() -> str:
    return (SPECS_DIR / "appendix_model.bug").read_text()


@pytest.fixture(scope="session")
def appendix_trial_path() -> pathlib.Path:
    return SPECS_DIR / "appendix_trial.json"
