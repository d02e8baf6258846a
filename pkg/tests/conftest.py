import pytest

from relshap.game import GameContext
from relshap.harness import example1
from relshap.provenance import compute_lineage


@pytest.fixture(scope="session")
def ex1():
    """(instance, query) for the built-in preset."""
    return example1()


@pytest.fixture(scope="session")
def ex1_partition(ex1):
    instance, query = ex1
    return compute_lineage(query, instance)


@pytest.fixture()
def ex1_ctx(ex1, ex1_partition):
    instance, query = ex1
    return GameContext(query, instance, ex1_partition)


@pytest.fixture()
def ex1_ctx_naive(ex1, ex1_partition):
    instance, query = ex1
    return GameContext(query, instance, ex1_partition, evaluator="naive")
