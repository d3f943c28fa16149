"""Constrained simulated annealing over integer assignment matrices.

The objective is the algebraic connectivity of the induced hypergraph, with
hinge penalties for budget overruns and task shortfalls and optional pressure
terms on the mean tasks-per-agent and teammates-per-agent counts:

    penalty = mu2 - sum_i eta_i (spent_i - B_i)+ - sum_k lambda_k (E_k - delivered_k)+
              - c_T * tasks_per_agent - c_A * teammates_per_agent

Moves come in two flavors. A guided move takes one unit from a task with
surplus and gives it to a task in deficit, shrinking the total shortfall by
exactly one. A plain move swaps one unit between two random tasks through one
agent on each side, which conserves both row and column totals. Candidates
whose active hypergraph is disconnected evaluate to -inf and are never
accepted; since moves preserve row sums, budget overruns can never appear
once the chain starts from a full-budget state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bipartite, spectral
from .errors import InfeasibleError
from .instance import ProblemInstance, bipartite_components, co_membership_graph
from .seeds import substream

__all__ = [
    "CsaParams",
    "TraceRow",
    "OptimizationResult",
    "initialize_assignment",
    "evaluate",
    "factor_metrics",
    "perturb",
    "anneal",
    "random_feasible_assignment",
]

_SWAP_RETRIES = 16


@dataclass
class CsaParams:
    """Annealing hyperparameters. Defaults follow the reference schedule."""

    t0: float = 1.0
    cooling: float = 0.999
    t_threshold: float = 1e-4
    max_iters: int = 50_000
    moves_per_step: int | None = None  # default: max(1, ceil((N + K) / 50))
    task_penalty: float = 10.0  # weight on unmet task energy
    agent_penalty: float = 10.0  # weight on budget overruns
    pack_size: int = 1
    p_guided: float = 0.8
    tasks_factor: float = 0.0  # pressure on mean tasks per agent
    teammates_factor: float = 0.0  # pressure on mean teammates per agent
    objective: str = "hypergraph"  # or "bipartite"
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.cooling < 1.0):
            raise ValueError("cooling must be in (0, 1)")
        if self.t0 <= 0 or self.t_threshold <= 0:
            raise ValueError("temperatures must be positive")
        if self.pack_size < 1:
            raise ValueError("pack_size must be >= 1")
        if not (0.0 <= self.p_guided <= 1.0):
            raise ValueError("p_guided must be in [0, 1]")
        if self.objective not in ("hypergraph", "bipartite"):
            raise ValueError("objective must be 'hypergraph' or 'bipartite'")

    def resolve_moves(self, n_agents: int, n_tasks: int) -> int:
        if self.moves_per_step is not None:
            if self.moves_per_step < 1:
                raise ValueError("moves_per_step must be >= 1")
            return self.moves_per_step
        return max(1, math.ceil((n_agents + n_tasks) / 50))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    temperature: float
    penalty: float
    mu2: float
    feasible: bool
    accepted: bool
    phase: str = ""


@dataclass
class OptimizationResult:
    best_assignment: np.ndarray
    best_penalty: float
    best_mu2: float
    feasible: bool
    trace: list[TraceRow] = field(default_factory=list)
    iterations_run: int = 0
    notes: tuple[str, ...] = ()


def factor_metrics(assignment: np.ndarray) -> tuple[float, float]:
    """(mean tasks per agent, mean distinct teammates per agent) of a matrix."""
    x = np.asarray(assignment) > 0
    tasks_per_agent = float(x.sum(axis=1).mean())
    adj = co_membership_graph(assignment)
    teammates = float(adj.sum(axis=1).mean())
    return tasks_per_agent, teammates


def initialize_assignment(
    inst: ProblemInstance, params: CsaParams, rng: np.random.Generator
) -> np.ndarray:
    """Spend every agent's full budget on uniformly random tasks.

    Units are placed in packs of ``pack_size``; the remainder, if any, lands
    on a single random task, so per-task allocations are multiples of the
    pack size except for at most one placement per agent.
    """
    if inst.budgets.sum() < inst.energies.sum():
        raise InfeasibleError(
            f"total budget {int(inst.budgets.sum())} cannot cover "
            f"total energy {int(inst.energies.sum())}"
        )
    n, k = inst.n_agents, inst.n_tasks
    assignment = np.zeros((n, k), dtype=np.int64)
    ps = params.pack_size
    for i in range(n):
        b = int(inst.budgets[i])
        for _ in range(b // ps):
            assignment[i, int(rng.integers(k))] += ps
        rem = b % ps
        if rem:
            assignment[i, int(rng.integers(k))] += rem
    return assignment


def _candidate_connected(assignment: np.ndarray, active: np.ndarray) -> bool:
    """Connectivity of the hypergraph on budget-positive agents and all tasks."""
    x = assignment > 0
    if not x.any(axis=0).all():  # a task nobody works on
        return False
    xa = x[active]
    if xa.shape[0] == 0 or not xa.any(axis=1).all():
        return False
    count, _, _ = bipartite_components(xa)
    return count == 1


def _evaluate_full(
    assignment: np.ndarray, inst: ProblemInstance, params: CsaParams
) -> tuple[float, float, np.ndarray]:
    """(penalty, mu2, task shortfall vector). Disconnected candidates get -inf."""
    e_tilde = inst.energies - assignment.sum(axis=0)
    active = inst.budgets > 0
    if not _candidate_connected(assignment, active):
        return -math.inf, math.nan, e_tilde
    sub = assignment[active]
    if params.objective == "bipartite":
        L = bipartite.bipartite_laplacian(
            bipartite._transition_from_blocks(*bipartite._blocks(inst.energies, sub))
        )
        mu2 = float(spectral.spectrum(L)[1])
    else:
        mu2 = spectral.mu2_of_assignment(inst.energies, sub)
    overrun = np.maximum(assignment.sum(axis=1) - inst.budgets, 0)
    penalty = (
        mu2
        - params.agent_penalty * float(overrun.sum())
        - params.task_penalty * float(np.maximum(e_tilde, 0).sum())
    )
    if params.tasks_factor or params.teammates_factor:
        tasks_pa, teammates_pa = factor_metrics(sub)
        penalty -= params.tasks_factor * tasks_pa + params.teammates_factor * teammates_pa
    return penalty, mu2, e_tilde


def evaluate(
    assignment: np.ndarray, inst: ProblemInstance, params: CsaParams
) -> tuple[float, np.ndarray]:
    """Penalty value and per-task shortfall vector for a candidate."""
    penalty, _, e_tilde = _evaluate_full(np.asarray(assignment), inst, params)
    return penalty, e_tilde


def _weighted_pick(rng: np.random.Generator, indices: np.ndarray, weights: np.ndarray) -> int:
    cum = np.cumsum(weights, dtype=np.float64)
    u = rng.random() * cum[-1]
    pos = int(np.searchsorted(cum, u, side="right"))
    return int(indices[min(pos, len(indices) - 1)])


def perturb(
    assignment: np.ndarray,
    e_tilde: np.ndarray,
    params: CsaParams,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply one batch of moves; returns new (assignment, shortfall) copies.

    With probability ``p_guided`` (and whenever both a surplus task and a
    deficit task exist) a unit migrates from surplus to deficit, the donor
    chosen proportional to surplus and the recipient proportional to deficit;
    otherwise one unit is swapped between two random non-empty tasks, which
    leaves all task totals unchanged.
    """
    b = np.array(assignment, dtype=np.int64)
    e = np.array(e_tilde, dtype=np.int64)
    k = b.shape[1]
    n_moves = params.resolve_moves(*b.shape)
    for _ in range(n_moves):
        deficit = np.flatnonzero(e > 0)
        surplus = np.flatnonzero(e < 0)
        if deficit.size and surplus.size and rng.random() < params.p_guided:
            donor = _weighted_pick(rng, surplus, -e[surplus].astype(np.float64))
            recipient = _weighted_pick(rng, deficit, e[deficit].astype(np.float64))
            members = np.flatnonzero(b[:, donor] > 0)
            agent = int(members[rng.integers(members.size)])
            b[agent, donor] -= 1
            b[agent, recipient] += 1
            e[donor] += 1
            e[recipient] -= 1
            continue
        if k < 2:
            continue
        for _ in range(_SWAP_RETRIES):
            k1, k2 = rng.choice(k, size=2, replace=False)
            m1 = np.flatnonzero(b[:, k1] > 0)
            m2 = np.flatnonzero(b[:, k2] > 0)
            if m1.size and m2.size:
                u = int(m1[rng.integers(m1.size)])
                v = int(m2[rng.integers(m2.size)])
                b[u, k1] -= 1
                b[u, k2] += 1
                b[v, k2] -= 1
                b[v, k1] += 1
                break
        # all retries hit an empty task: the move degrades to a no-op
    return b, e


def anneal(
    inst: ProblemInstance,
    params: CsaParams | None = None,
    *,
    initial: np.ndarray | None = None,
) -> OptimizationResult:
    """Run the annealing chain and return the best feasible state found.

    If no feasible state is ever seen, the best state by penalty is returned
    with ``feasible=False``. ``initial`` overrides the random full-budget
    initialization, e.g. to continue from a known-good assignment.
    """
    params = params or CsaParams()
    rng_init = substream(params.seed, "csa-init")
    rng_chain = substream(params.seed, "csa-chain")
    if initial is None:
        current = initialize_assignment(inst, params, rng_init)
    else:
        current = np.array(initial, dtype=np.int64)
        if current.shape != (inst.n_agents, inst.n_tasks):
            raise ValueError("initial assignment has the wrong shape")
        if inst.budgets.sum() < inst.energies.sum():
            raise InfeasibleError("total budget cannot cover total energy")

    penalty, mu2, e_tilde = _evaluate_full(current, inst, params)
    overrun_free = bool(np.all(current.sum(axis=1) <= inst.budgets))
    feasible = overrun_free and bool(np.all(e_tilde <= 0)) and math.isfinite(penalty)

    best_penalty, best_mu2, best_assignment = penalty, mu2, current.copy()
    best_feasible = feasible
    if feasible:
        best_f_penalty, best_f_mu2, best_f_assignment = penalty, mu2, current.copy()
    else:
        best_f_penalty = -math.inf
        best_f_mu2 = math.nan
        best_f_assignment = None

    temperature = params.t0
    trace = [TraceRow(0, temperature, penalty, mu2, feasible, True)]
    t = 0
    while temperature > params.t_threshold and t < params.max_iters:
        candidate, e_candidate = perturb(current, e_tilde, params, rng_chain)
        cand_penalty, cand_mu2, cand_e = _evaluate_full(candidate, inst, params)
        if __debug__ and t % 1000 == 0:
            assert np.array_equal(e_candidate, cand_e), "incremental shortfall drifted"
        if math.isinf(cand_penalty) and cand_penalty < 0:
            accepted = False
        elif cand_penalty >= penalty:
            accepted = True
        else:
            accepted = rng_chain.random() < math.exp((cand_penalty - penalty) / temperature)
        if accepted:
            current, penalty, mu2, e_tilde = candidate, cand_penalty, cand_mu2, cand_e
            feasible = (
                bool(np.all(current.sum(axis=1) <= inst.budgets))
                and bool(np.all(e_tilde <= 0))
                and math.isfinite(penalty)
            )
            if penalty > best_penalty:
                best_penalty, best_mu2 = penalty, mu2
                best_assignment = current.copy()
                best_feasible = feasible
            if feasible and penalty > best_f_penalty:
                best_f_penalty, best_f_mu2 = penalty, mu2
                best_f_assignment = current.copy()
        temperature *= params.cooling
        t += 1
        trace.append(TraceRow(t, temperature, penalty, mu2, feasible, accepted))

    if best_f_assignment is not None:
        return OptimizationResult(
            best_assignment=best_f_assignment,
            best_penalty=best_f_penalty,
            best_mu2=best_f_mu2,
            feasible=True,
            trace=trace,
            iterations_run=t,
        )
    return OptimizationResult(
        best_assignment=best_assignment,
        best_penalty=best_penalty,
        best_mu2=best_mu2,
        feasible=best_feasible,
        trace=trace,
        iterations_run=t,
        notes=("no feasible state visited",),
    )


def random_feasible_assignment(
    inst: ProblemInstance, rng: np.random.Generator, max_tries: int = 1000
) -> np.ndarray:
    """Random assignment meeting every task's energy within every budget.

    Budget units are dealt as shuffled tokens to tasks in order of need;
    leftover tokens stay unspent. Retries until the result is connected.
    """
    if inst.budgets.sum() < inst.energies.sum():
        raise InfeasibleError("total budget cannot cover total energy")
    tokens = np.repeat(np.arange(inst.n_agents), inst.budgets)
    need = inst.energies
    for _ in range(max_tries):
        rng.shuffle(tokens)
        assignment = np.zeros((inst.n_agents, inst.n_tasks), dtype=np.int64)
        pos = 0
        for k in range(inst.n_tasks):
            for agent in tokens[pos : pos + int(need[k])]:
                assignment[agent, k] += 1
            pos += int(need[k])
        active = inst.budgets > 0
        if _candidate_connected(assignment, active):
            return assignment
    raise RuntimeError("could not sample a connected feasible assignment")
