import json

import pytest

from dsmplan import (
    BudgetConfig,
    ConversationModel,
    Dsm,
    assignment_from_groups,
    build_dsm,
    default_model_catalog,
    find_model,
    make_naive_plan,
    make_pieces,
    parse_manifest,
    sequence,
)
from dsmplan.data import SPACECRAFT_EXPECTED, SPACECRAFT_MANIFEST
from dsmplan.planning import ConversationPlan, ModelSpec

# the reference grouping shipped with the spacecraft corpus: two multi-member
# clusters, A/B/M left on their own
REFERENCE_GROUPS = [["A"], ["B"], ["C", "F", "G", "H"], ["D", "E", "I", "J", "L", "K"], ["M"]]


@pytest.fixture(scope="session")
def spacecraft() -> ConversationModel:
    return parse_manifest(SPACECRAFT_MANIFEST)


@pytest.fixture(scope="session")
def spacecraft_dsm(spacecraft) -> Dsm:
    return build_dsm(spacecraft.elements)


@pytest.fixture(scope="session")
def expected() -> dict:
    with open(SPACECRAFT_EXPECTED, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def mistral() -> ModelSpec:
    return find_model(default_model_catalog(), "mistral-7b")


@pytest.fixture(scope="session")
def fixture_config() -> BudgetConfig:
    return BudgetConfig(margin=0.05, fm_ratio=1.0, instructions_per_piece=50)


@pytest.fixture(scope="session")
def reference_plan(spacecraft, spacecraft_dsm, mistral, fixture_config) -> ConversationPlan:
    """The four-piece plan: the derived sequence cut along the reference grouping."""
    clusters = assignment_from_groups(spacecraft_dsm, REFERENCE_GROUPS)
    return make_pieces(spacecraft, sequence(spacecraft_dsm), clusters, fixture_config, mistral)


@pytest.fixture(scope="session")
def naive_plan(spacecraft, mistral, fixture_config) -> ConversationPlan:
    return make_naive_plan(spacecraft, fixture_config, mistral)
