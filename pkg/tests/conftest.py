"""Session fixtures: a small fitted corpus shared by pipeline-level tests."""

import pytest

from hqa.corpus import build_corpus
from hqa.pipeline import fit_templates
from hqa.symbols import STARTER_SPECS

TINY_TARGETS = ("dal", "plus")


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_corpus")
    specs = [s for s in STARTER_SPECS if s.target in TINY_TARGETS]
    manifest = build_corpus(specs, out, n_train=6, n_test=2, seed=7)
    return manifest, out


@pytest.fixture(scope="session")
def tiny_templates(tiny_corpus):
    manifest, out = tiny_corpus
    return fit_templates(manifest, out)
