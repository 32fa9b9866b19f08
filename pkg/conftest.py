"""Configuration for pytest."""

import pytest

import pymarkovorder as pmo


@pytest.fixture(autouse=True)
def _add_standard_imports(doctest_namespace):
    """Add pymarkovorder namespace for doctest."""
    doctest_namespace["pmo"] = pmo


@pytest.fixture()
def zoo():
    """Return the built-in Markov chains."""
    return pmo.markov_zoo()


@pytest.fixture()
def gmodel():
    """Return a geometric binary g-model."""
    return pmo.GeometricBinaryGModel(0.3, 0.2, 0.5)


@pytest.fixture()
def markov1_toml(tmp_path):
    """Return a TOML file of a first-order binary chain."""
    path = tmp_path / "markov1.toml"
    path.write_text(
        "[model]\n"
        'type = "markov"\n'
        'name = "toml-markov1"\n'
        "alphabet_size = 2\n"
        "order = 1\n"
        "transition = [[0.7, 0.3], [0.2, 0.8]]\n",
        encoding="utf-8",
    )
    return path
