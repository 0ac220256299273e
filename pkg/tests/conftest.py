from pathlib import Path

import pytest

from fldeep.bundle import parse_bundle
from fldeep.pipeline import default_ensemble, default_link_model

FIXTURES = Path(__file__).parent / "fixtures" / "bundles"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def clean_mlp():
    return parse_bundle(FIXTURES / "clean_mlp")


@pytest.fixture(scope="session")
def clean_cnn():
    return parse_bundle(FIXTURES / "clean_cnn")


@pytest.fixture(scope="session")
def clean_reg():
    return parse_bundle(FIXTURES / "clean_reg")


@pytest.fixture(scope="session")
def lib_skew():
    return parse_bundle(FIXTURES / "clean_mlp-m-lib-s100")


@pytest.fixture(scope="session")
def seeds(clean_mlp, clean_cnn, clean_reg):
    return {"mlp": clean_mlp, "cnn": clean_cnn, "reg": clean_reg}


@pytest.fixture(scope="session")
def ensemble():
    return default_ensemble()


@pytest.fixture(scope="session")
def link_model():
    return default_link_model()


@pytest.fixture(scope="session")
def planted():
    from fldeep.linkpred import train_linkpred
    from planted import planted_corpus

    graphs = planted_corpus(n=60, seed=29, p=0.95)
    model = train_linkpred(graphs, dim=32, seed=17, epochs=400)
    return graphs, model
