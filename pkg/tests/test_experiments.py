"""Enumeration, community rewiring, scaling fits, and the budget sweep."""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
import pytest

from conftest import count_connected_covering, make_instance
from hyperteam.errors import ConvergenceError
from hyperteam.experiments import (
    SCHEMES,
    CommunitySpec,
    budget_sweep,
    build_communities,
    diffusion_comparison,
    enumerate_small,
    fit_power_law,
    rewire,
    scaling_experiment,
    to_instance,
)
from hyperteam.instance import ProblemInstance, bipartite_components
from hyperteam.seeds import substream


def test_enumeration_count_small():
    found = enumerate_small(4, 2)
    assert len(found) == count_connected_covering(4, 2)


def test_enumeration_count_default_size():
    found = enumerate_small(5, 3)
    assert len(found) == 1755
    assert len(found) == count_connected_covering(5, 3)


def test_enumeration_sorted_and_connected():
    found = enumerate_small(4, 2)
    mu2s = [h.mu2 for h in found]
    assert mu2s == sorted(mu2s, reverse=True)
    assert all(h.mu2 > 0 for h in found)
    for h in found:
        inst = to_instance(h.edges, 4)
        count, _, _ = bipartite_components(np.asarray(inst.assignment) > 0)
        assert count == 1


def _canonical(edges, n_nodes):
    return min(
        tuple(sorted(tuple(sorted(perm[v] for v in e)) for e in edges))
        for perm in permutations(range(n_nodes))
    )


def test_enumeration_dedup_covers_all_classes():
    full = enumerate_small(4, 2)
    reps = enumerate_small(4, 2, dedup=True)
    classes = {_canonical(h.edges, 4) for h in full}
    rep_classes = [_canonical(h.edges, 4) for h in reps]
    assert len(rep_classes) == len(set(rep_classes))
    assert set(rep_classes) == classes


def test_enumeration_guard():
    with pytest.raises(ValueError):
        enumerate_small(8, 4)


def test_to_instance_marginals():
    edges = ((0, 1), (1, 2, 3))
    inst = to_instance(edges, 4)
    assert np.array_equal(inst.budgets, [1, 2, 1, 1])
    assert np.array_equal(inst.energies, [2, 3])
    assert inst.assignment[1, 0] == 1 and inst.assignment[1, 1] == 1


def test_diffusion_comparison():
    insts = [to_instance(h.edges, 4) for h in enumerate_small(4, 2)[:3]]
    times = np.linspace(0.0, 200.0, 31)
    traces = diffusion_comparison(insts, times=times)
    assert len(traces) == 3
    for trace in traces:
        assert trace.states.shape == (31, 4)
        assert np.allclose(trace.states[0], [1, 0, 0, 0], atol=1e-12)
        assert np.allclose(trace.states[-1], 0.25, atol=1e-5)
        assert trace.mu2 > 0

    lopsided = [insts[0], to_instance(((0, 1),), 2)]
    with pytest.raises(ValueError):
        diffusion_comparison(lopsided)


def test_build_communities_block_structure():
    inst = build_communities(CommunitySpec(2))
    a = np.asarray(inst.assignment)
    assert a.shape == (12, 12)
    assert (a[:6, :6] == 1).all() and (a[6:, 6:] == 1).all()
    assert not a[:6, 6:].any() and not a[6:, :6].any()
    assert np.array_equal(inst.energies, [6] * 12)
    count, _, _ = bipartite_components(a > 0)
    assert count == 2


def test_spec_validation():
    with pytest.raises(ValueError):
        CommunitySpec(1)
    with pytest.raises(ValueError):
        CommunitySpec(2, nodes_per_community=1)
    with pytest.raises(ValueError):
        CommunitySpec(2, edges_per_community=0)
    with pytest.raises(ValueError):
        CommunitySpec(2, scheme="braid")


@pytest.mark.parametrize("scheme", SCHEMES)
def test_rewire_conserves_marginals_and_connects(scheme):
    spec = CommunitySpec(4, 5, 5, scheme)
    base = build_communities(spec)
    rng = substream(0, "test-rewire", scheme)
    out = rewire(base, spec, rng)
    a, b = np.asarray(out.assignment), np.asarray(base.assignment)
    assert np.array_equal(a.sum(axis=1), b.sum(axis=1))
    assert np.array_equal(a.sum(axis=0), b.sum(axis=0))
    count, _, _ = bipartite_components(a > 0)
    assert count == 1
    if scheme != "random":
        # three swaps, each toggling four cells by one unit
        assert np.abs(a - b).sum() == 4 * (spec.n_communities - 1)


def test_rewire_one_node_builds_a_centroid_agent():
    spec = CommunitySpec(4, 5, 5, "one_node")
    out = rewire(build_communities(spec), spec, substream(1, "t"))
    a = np.asarray(out.assignment)
    for c in range(1, 4):
        cols = slice(c * 5, (c + 1) * 5)
        assert a[0, cols].sum() >= 1


def test_rewire_one_edge_builds_a_centroid_task():
    spec = CommunitySpec(4, 5, 5, "one_edge")
    out = rewire(build_communities(spec), spec, substream(2, "t"))
    a = np.asarray(out.assignment)
    for c in range(1, 4):
        rows = slice(c * 5, (c + 1) * 5)
        assert a[rows, 0].sum() >= 1


def test_rewire_head2tail_links_neighbours():
    spec = CommunitySpec(4, 5, 5, "head2tail")
    out = rewire(build_communities(spec), spec, substream(3, "t"))
    a = np.asarray(out.assignment)
    for c in range(3):
        rows_next = slice((c + 1) * 5, (c + 2) * 5)
        cols_here = slice(c * 5, (c + 1) * 5)
        rows_here = slice(c * 5, (c + 1) * 5)
        cols_next = slice((c + 1) * 5, (c + 2) * 5)
        crossings = a[rows_next, cols_here].sum() + a[rows_here, cols_next].sum()
        assert crossings >= 1


def test_rewire_structural_requirements():
    # a centroid node cannot donate more home memberships than it has
    spec = CommunitySpec(8, 6, 2, "one_node")
    with pytest.raises(ValueError):
        rewire(build_communities(spec), spec, substream(4, "t"))
    spec = CommunitySpec(8, 2, 6, "one_edge")
    with pytest.raises(ValueError):
        rewire(build_communities(spec), spec, substream(5, "t"))


def test_scaling_experiment_smoke():
    fits, samples = scaling_experiment(("random",), (2, 3, 4), reps=2, seed=0)
    assert len(samples) == 6
    assert {s[1] for s in samples} == {2, 3, 4}
    assert all(v > 0 for *_, v in samples)
    fit = fits[0]
    assert fit.scheme == "random"
    assert math.isfinite(fit.exponent)
    assert len(fit.mean_mu2) == 3

    _, parallel = scaling_experiment(("random",), (2, 3, 4), reps=2, seed=0, jobs=2)
    assert samples == parallel


def test_scaling_experiment_fixed_layout():
    fits, samples = scaling_experiment(
        ("head2tail",), (2, 3, 4), reps=1, seed=1, coupled=False
    )
    assert len(samples) == 3
    assert math.isfinite(fits[0].exponent)


def _hub_instance(n_tasks=12, members=4, pattern=(1, 3)):
    """Task-transitive family: dedicated members plus one coordinator on all."""
    n = n_tasks * members + 1
    a = np.zeros((n, n_tasks), dtype=np.int64)
    for k in range(n_tasks):
        a[k * members : (k + 1) * members, k] = 1
    a[-1, :] = 1
    budgets = a.sum(axis=1)
    budgets[:-1] = np.tile(pattern, n_tasks * members // len(pattern))
    return ProblemInstance(
        agent_ids=tuple(f"a{i}" for i in range(n)),
        budgets=budgets,
        task_ids=tuple(f"t{k}" for k in range(n_tasks)),
        energies=a.sum(axis=0),
        assignment=a,
    )


def test_budget_sweep_grouping():
    inst = _hub_instance()
    result = budget_sweep(inst, multipliers=(1, 2), sub_sizes=(3, 4, 6), reps=2, seed=0)
    assert len(result.points) == 12
    for p in result.points:
        assert p.multiplier in (1, 2)
        assert abs(p.n_agents - 4 * p.n_tasks) <= 0.4 * p.n_tasks
        assert p.mu2 > 0
    assert [c.multiplier for c in result.curves] == [1, 2]
    for curve in result.curves:
        assert len(curve.mean_mu2) == 3
        assert math.isfinite(curve.fit.exponent)


def test_budget_sweep_needs_suitable_ratio(coauthor_small):
    # a two-agents-per-task dataset never hits the four-to-one window
    with pytest.raises(ConvergenceError):
        budget_sweep(
            coauthor_small, multipliers=(1,), sub_sizes=(4,), reps=1, seed=0, max_tries=20
        )


def test_fit_power_law_exact():
    xs = np.array([2.0, 4.0, 8.0, 16.0])
    fit = fit_power_law(xs, 5.0 * xs**-2)
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(5.0), abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)


def test_fit_power_law_flat():
    xs = np.array([1.0, 2.0, 3.0, 4.0])
    fit = fit_power_law(xs, np.full(4, 7.0))
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_power_law_noisy():
    rng = np.random.default_rng(0)
    xs = np.linspace(3.0, 60.0, 50)
    ys = 2.0 * xs**-1.5 * np.exp(rng.normal(0, 0.05, size=50))
    fit = fit_power_law(xs, ys)
    assert abs(fit.exponent + 1.5) < 0.05
    assert fit.r_squared > 0.98


def test_fit_power_law_guards():
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        fit_power_law(np.array([1.0, 2.0, 0.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        fit_power_law(np.array([2.0, 2.0, 2.0]), np.array([1.0, 2.0, 3.0]))
