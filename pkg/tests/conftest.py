"""Shared builders for the test suite."""

from __future__ import annotations

from importlib import resources
from itertools import combinations

import numpy as np
import pytest

from hyperteam.instance import ProblemInstance, load_instance


def count_connected_covering(n_nodes: int, n_edges: int) -> int:
    """Union-find reference count of connected covering hypergraphs.

    Deliberately independent of the library's component filter.
    """
    subsets = [
        s for r in range(2, n_nodes + 1) for s in combinations(range(n_nodes), r)
    ]
    count = 0
    for edges in combinations(subsets, n_edges):
        parent = list(range(n_nodes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        touched = set()
        for edge in edges:
            touched.update(edge)
            for v in edge[1:]:
                parent[find(edge[0])] = find(v)
        if len(touched) == n_nodes and len({find(v) for v in range(n_nodes)}) == 1:
            count += 1
    return count


def make_instance(assignment, budgets=None, energies=None) -> ProblemInstance:
    """Instance from a matrix; budgets/energies default to row/column sums."""
    a = np.asarray(assignment, dtype=np.int64)
    n, k = a.shape
    return ProblemInstance(
        agent_ids=tuple(f"a{i}" for i in range(n)),
        budgets=a.sum(axis=1) if budgets is None else np.asarray(budgets),
        task_ids=tuple(f"t{j}" for j in range(k)),
        energies=a.sum(axis=0) if energies is None else np.asarray(energies),
        assignment=a,
    )


def random_connected_instance(
    rng: np.random.Generator,
    n_agents: int,
    n_tasks: int,
    max_weight: int = 3,
    slack: int = 0,
) -> ProblemInstance:
    """Random connected instance: no idle agents, no empty tasks.

    ``slack`` adds that much unspent budget to every agent, which the
    optimizer tests use to leave room for phase-2 moves.
    """
    for _ in range(1000):
        a = rng.integers(0, max_weight + 1, size=(n_agents, n_tasks))
        a[rng.integers(n_agents), :] = np.maximum(a[rng.integers(n_agents), :], 1)
        if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
            continue
        inst = make_instance(a)
        if slack:
            inst = ProblemInstance(
                agent_ids=inst.agent_ids,
                budgets=np.asarray(inst.budgets) + slack,
                task_ids=inst.task_ids,
                energies=inst.energies,
                assignment=inst.assignment,
            )
        from hyperteam.instance import is_connected

        if is_connected(inst):
            return inst
    raise RuntimeError("could not draw a connected instance")


def toy_path(name: str) -> str:
    return str(resources.files("hyperteam.data") / f"{name}.json")


@pytest.fixture(scope="session")
def coauthor_small() -> ProblemInstance:
    return load_instance(toy_path("coauthor_small"))


@pytest.fixture(scope="session")
def coauthor_large() -> ProblemInstance:
    return load_instance(toy_path("coauthor_large"))
