"""Two-phase greedy baseline optimizer.

A centralized initialization picks high-budget hub agents until every task is
touched, chaining consecutive hubs through a shared task so the seed
hypergraph is connected. Phase 1 then fills task shortfalls one packet at a
time, each time applying the single (agent, task) increment with the best
connectivity gain per unit over all open tasks and all agents with budget.
Phase 2 spends whatever budget is left the same way, except the task choice
is unrestricted; negative-gain moves are rejected outright, or accepted with
a Metropolis probability when ``stochastic_accept`` is on.

Both phases switch to a cheaper rule once more agents have budget left than
``random_threshold``: the agent is drawn uniformly at random and only that
agent's task options are scanned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .csa import OptimizationResult, TraceRow
from .errors import InfeasibleError, StallError
from .instance import ProblemInstance, bipartite_components, validate
from .seeds import substream

__all__ = [
    "GreedyParams",
    "centralized_init",
    "phase1",
    "phase2",
    "greedy_optimize",
]


@dataclass
class GreedyParams:
    packet_size: int = 1  # units offered per assignment step
    stochastic_accept: bool = False
    phase2_temperature: float = 1.0
    random_threshold: int = 50  # above this many candidate agents, sample one
    seed: int = 0

    def __post_init__(self):
        if self.packet_size < 1:
            raise ValueError("packet_size must be >= 1")
        if self.phase2_temperature <= 0:
            raise ValueError("phase2_temperature must be positive")
        if self.random_threshold < 1:
            raise ValueError("random_threshold must be >= 1")


def centralized_init(inst: ProblemInstance) -> np.ndarray:
    """Hub-based seed assignment touching every task, connected by chaining.

    Agents are consumed in descending budget order. The first hub puts one
    unit on as many uncovered tasks as its budget allows; every later hub
    first spends one unit on the lowest-index task covered by the previous
    hub (the chain link), then covers more tasks with its remaining budget.
    """
    order = sorted(range(inst.n_agents), key=lambda i: (-int(inst.budgets[i]), i))
    assignment = np.zeros((inst.n_agents, inst.n_tasks), dtype=np.int64)
    uncovered = list(range(inst.n_tasks))
    prev_hub_covered: list[int] = []
    prev_hub_touched: list[int] = []
    for agent in order:
        if not uncovered:
            break
        budget = int(inst.budgets[agent])
        if budget <= 0:
            continue
        touched: list[int] = []
        if prev_hub_touched:
            link = min(prev_hub_covered) if prev_hub_covered else min(prev_hub_touched)
            assignment[agent, link] += 1
            budget -= 1
            touched.append(link)
        covered: list[int] = []
        while budget > 0 and uncovered:
            k = uncovered.pop(0)
            assignment[agent, k] += 1
            budget -= 1
            covered.append(k)
        if not covered and uncovered:
            # chain-only hub: no coverage progress, try the next agent
            if touched:
                prev_hub_covered, prev_hub_touched = covered, touched
            continue
        prev_hub_covered, prev_hub_touched = covered, touched + covered
    if uncovered:
        raise StallError(
            f"hub capacity exhausted with {len(uncovered)} task(s) still uncovered"
        )
    return assignment


def _mu2(inst: ProblemInstance, assignment: np.ndarray) -> float:
    return spectral.mu2_of_assignment(inst.energies, assignment)


def phase1(
    inst: ProblemInstance,
    assignment: np.ndarray,
    params: GreedyParams | None = None,
    trace: list[TraceRow] | None = None,
) -> np.ndarray:
    """Fill every task's energy shortfall, best connectivity gain per unit first.

    One packet lands per round. Every agent with remaining budget offers
    ``min(remaining, shortfall, packet_size)`` units to every still-short
    task; the offer with the highest mu2 gain per unit wins, ties going to
    the lowest agent index and then the lowest task index. When more agents
    have budget than ``random_threshold``, the agent is drawn uniformly at
    random and only that agent's offers are scored.
    """
    params = params or GreedyParams()
    rng = substream(params.seed, "greedy-phase1")
    b = np.array(assignment, dtype=np.int64)
    remaining = inst.budgets - b.sum(axis=1)
    if np.any(remaining < 0):
        raise ValueError("seed assignment exceeds a budget")
    shortfall = inst.energies - b.sum(axis=0)
    step = 0
    while np.any(shortfall > 0):
        open_tasks = np.flatnonzero(shortfall > 0)
        available = np.flatnonzero(remaining > 0)
        if available.size == 0:
            raise StallError(
                "no remaining budget while tasks are still short (greedy infeasible)"
            )
        if available.size > params.random_threshold:
            available = available[[rng.integers(available.size)]]
        base = _mu2(inst, b)
        best_gain, agent, task, units = -math.inf, -1, -1, 0
        for j in available.tolist():
            for k in open_tasks.tolist():
                e_units = int(min(remaining[j], shortfall[k], params.packet_size))
                b[j, k] += e_units
                gain = (_mu2(inst, b) - base) / e_units
                b[j, k] -= e_units
                if gain > best_gain:
                    best_gain, agent, task, units = gain, j, k, e_units
        if agent < 0:
            raise StallError("no admissible increment found")
        b[agent, task] += units
        remaining[agent] -= units
        shortfall[task] -= units
        step += 1
        if trace is not None:
            mu2 = base + best_gain * units
            trace.append(
                TraceRow(step, 0.0, mu2, mu2, bool(np.all(shortfall <= 0)), True, "1")
            )
    return b


def phase2(
    inst: ProblemInstance,
    assignment: np.ndarray,
    params: GreedyParams | None = None,
    trace: list[TraceRow] | None = None,
) -> np.ndarray:
    """Spend leftover budget on the tasks with the best connectivity gain.

    One packet lands per round: every agent with remaining budget offers
    ``min(remaining, packet_size)`` units to every task, and the single best
    gain-per-unit offer is applied (ties resolved as in phase 1). A round
    whose best offer is negative ends the phase when ``stochastic_accept``
    is off, leaving the rest of the budget unspent; with it on, the offer is
    instead accepted with probability exp(gain / temperature) and re-drawn
    next round otherwise. The same ``random_threshold`` shortcut as phase 1
    applies.
    """
    params = params or GreedyParams()
    rng = substream(params.seed, "greedy-phase2")
    b = np.array(assignment, dtype=np.int64)
    remaining = inst.budgets - b.sum(axis=1)
    if np.any(remaining < 0):
        raise ValueError("assignment exceeds a budget")
    step = 0
    max_rounds = 2 * int(remaining.sum() // params.packet_size) + inst.n_agents + 1
    for _ in range(max_rounds):
        available = np.flatnonzero(remaining > 0)
        if available.size == 0:
            break
        exhaustive = available.size <= params.random_threshold
        if not exhaustive:
            available = available[[rng.integers(available.size)]]
        base = _mu2(inst, b)
        best_gain, agent, task, units = -math.inf, -1, -1, 0
        for j in available.tolist():
            e_units = int(min(remaining[j], params.packet_size))
            for k in range(inst.n_tasks):
                b[j, k] += e_units
                gain = (_mu2(inst, b) - base) / e_units
                b[j, k] -= e_units
                if gain > best_gain:
                    best_gain, agent, task, units = gain, j, k, e_units
        accept = best_gain >= 0
        if not accept:
            if not params.stochastic_accept:
                if exhaustive:
                    # no move anywhere can help; spending more only hurts
                    break
                continue  # unlucky draw, burn the round and redraw
            accept = rng.random() < math.exp(
                best_gain * units / params.phase2_temperature
            )
        if accept:
            b[agent, task] += units
            remaining[agent] -= units
            step += 1
            if trace is not None:
                mu2 = base + best_gain * units
                trace.append(TraceRow(step, 0.0, mu2, mu2, True, True, "2"))
    return b


def greedy_optimize(inst: ProblemInstance, params: GreedyParams | None = None) -> OptimizationResult:
    """Centralized init, then phase 1 (feasibility) and phase 2 (spare budget).

    Phase 2 is skipped when there is no spare budget at all, i.e. when total
    budget equals total energy; the skip is recorded in the result notes.
    """
    params = params or GreedyParams()
    if inst.budgets.sum() < inst.energies.sum():
        raise InfeasibleError("total budget cannot cover total energy")
    trace: list[TraceRow] = []
    seed_assignment = centralized_init(inst)
    mu2_seed = _mu2(inst, seed_assignment)
    seed_feasible = bool(np.all(inst.energies - seed_assignment.sum(axis=0) <= 0))
    trace.append(TraceRow(0, 0.0, mu2_seed, mu2_seed, seed_feasible, True, "init"))
    filled = phase1(inst, seed_assignment, params, trace)
    notes: tuple[str, ...] = ()
    if int(inst.budgets.sum()) == int(inst.energies.sum()):
        notes = ("phase 2 skipped: no spare budget (total budget equals total energy)",)
        final = filled
    else:
        final = phase2(inst, filled, params, trace)
    mu2 = _mu2(inst, final)
    report = validate(inst.with_assignment(final))
    # connectivity is judged over participating agents only: an agent that
    # spends nothing is not part of the produced hypergraph
    active = final.sum(axis=1) > 0
    components, _, _ = bipartite_components(final[active] > 0)
    return OptimizationResult(
        best_assignment=final,
        best_penalty=mu2,
        best_mu2=mu2,
        feasible=report.feasible and components == 1,
        trace=trace,
        iterations_run=len(trace) - 1,
        notes=notes,
    )
