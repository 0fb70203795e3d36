"""Shared fixtures: frames, networks, scripted trips, and small corpora."""

from __future__ import annotations

import json

import pytest

from transitflow.context import ReferenceData
from transitflow.geo import LocalFrame
from transitflow.synth import (
    CorpusSpec,
    build_classification_fixture,
    build_corpus,
    build_detour_fixture,
    build_network,
)

BASE_LAT, BASE_LNG = 46.06, -64.78


@pytest.fixture(scope="session")
def frame() -> LocalFrame:
    return LocalFrame.centered_on(BASE_LAT, BASE_LNG)


@pytest.fixture(scope="session")
def network():
    return build_network()


@pytest.fixture(scope="session")
def classification_fixture():
    return build_classification_fixture()


@pytest.fixture(scope="session")
def detour_fixture():
    return build_detour_fixture()


def reference_for(fx) -> ReferenceData:
    return ReferenceData(fx.bundle, {fx.route_id: fx.geometry}, fx.roads)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A 10k-tuple defect corpus with ground truth, built once per session."""
    out = tmp_path_factory.mktemp("small_corpus")
    paths, truth = build_corpus(CorpusSpec(total=10_000, seed=3), out)
    canon = json.loads(paths["canonicalization"].read_text(encoding="utf-8"))
    return paths, truth, canon
