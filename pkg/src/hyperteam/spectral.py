"""Random-walk spectral quantities for edge-dependent vertex-weighted hypergraphs.

Tasks are hyperedges weighted by their energy demand; an agent's weight inside
a task is its assigned unit count. The induced vertex random walk is

    P = D_V^-1 W D_E^-1 R^T

where ``W[i, k] = energy[k]`` on incidences, ``R[i, k] = assignment[i, k]``,
``D_V`` holds vertex degrees (sum of incident task energies) and ``D_E`` holds
task degrees (sum of member weights). The Laplacian is built from P and its
stationary distribution pi:

    L = Pi - (Pi P + P^T Pi) / 2.

``L`` is symmetric positive semidefinite with the all-ones vector in its
kernel; the second-smallest eigenvalue is the algebraic connectivity that the
optimizers maximize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegreeError, DisconnectedError
from .instance import ProblemInstance, bipartite_components, is_connected

__all__ = [
    "EDVWMatrices",
    "SpectralBundle",
    "build_matrices",
    "transition_matrix",
    "stationary_distribution",
    "laplacian",
    "spectrum",
    "algebraic_connectivity",
    "diffuse",
    "spectral_bundle",
    "mu2_of_assignment",
]

# Above this size the stationary solver switches from a dense
# eigendecomposition to power iteration.
_DENSE_LIMIT = 512


@dataclass(frozen=True)
class EDVWMatrices:
    """Weight system of the vertex walk.

    W : (N, K) hyperedge weight replicated on incidences
    R : (N, K) per-task vertex weights (the assignment itself)
    d_v : (N,) vertex degrees, row sums of W
    d_e : (K,) hyperedge degrees, column sums of R
    """

    W: np.ndarray
    R: np.ndarray
    d_v: np.ndarray
    d_e: np.ndarray


def _edvw(energies: np.ndarray, assignment: np.ndarray) -> EDVWMatrices:
    incidence = assignment > 0
    W = incidence * energies[np.newaxis, :].astype(np.float64)
    R = assignment.astype(np.float64)
    d_v = W.sum(axis=1)
    d_e = R.sum(axis=0)
    return EDVWMatrices(W=W, R=R, d_v=d_v, d_e=d_e)


def build_matrices(inst: ProblemInstance) -> EDVWMatrices:
    """Weight matrices and degree vectors for an instance's hypergraph."""
    m = _edvw(inst.energies, inst.assignment)
    if np.any(m.d_v == 0):
        i = int(np.flatnonzero(m.d_v == 0)[0])
        raise DegreeError(f"agent {inst.agent_ids[i]!r} belongs to no task")
    if np.any(m.d_e == 0):
        k = int(np.flatnonzero(m.d_e == 0)[0])
        raise DegreeError(f"task {inst.task_ids[k]!r} has no agents")
    return m


def transition_matrix(m: EDVWMatrices) -> np.ndarray:
    """Row-stochastic vertex transition matrix of the two-hop walk."""
    return (m.W / m.d_v[:, np.newaxis]) @ (m.R / m.d_e[np.newaxis, :]).T


def _stationary_dense(P: np.ndarray) -> np.ndarray:
    """Left eigenvector of P for eigenvalue 1, normalized to sum 1."""
    evals, evecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(evals - 1.0)))
    if abs(evals[idx] - 1.0) > 1e-6:
        raise ConvergenceError("no eigenvalue close to 1; is the chain stochastic?")
    pi = np.real(evecs[:, idx])
    total = pi.sum()
    if abs(total) < 1e-12:
        raise ConvergenceError("degenerate stationary eigenvector")
    pi = pi / total
    if np.min(pi) < -1e-9:
        raise ConvergenceError("stationary eigenvector has negative mass; chain may be reducible")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _stationary_power(P: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < tol:
            return nxt
        pi = nxt
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def stationary_distribution(
    P: np.ndarray, *, tol: float = 1e-12, max_iter: int = 10**6
) -> np.ndarray:
    """Stationary distribution of a row-stochastic, irreducible, aperiodic chain.

    Dense eigendecomposition up to size 512, power iteration beyond that.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if P.shape[0] <= _DENSE_LIMIT:
        return _stationary_dense(P)
    return _stationary_power(P, tol, max_iter)


def laplacian(P: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Symmetric Laplacian Pi - (Pi P + P^T Pi) / 2, explicitly symmetrized."""
    pip = pi[:, np.newaxis] * P
    L = np.diag(pi) - 0.5 * (pip + pip.T)
    return 0.5 * (L + L.T)


def spectrum(L: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in ascending order."""
    return np.linalg.eigvalsh(L)


def algebraic_connectivity(L: np.ndarray) -> float:
    """Second-smallest Laplacian eigenvalue."""
    if L.shape[0] < 2:
        raise ValueError("algebraic connectivity needs at least two agents")
    return float(spectrum(L)[1])


def diffuse(L: np.ndarray, x0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Heat-equation trajectory x(t) = exp(-L t) x0 sampled at the given times.

    Returns an array of shape (len(times), N). Row sums are conserved and the
    trajectory converges to the mean of ``x0`` in every coordinate.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if np.any(times < 0):
        raise ValueError("diffusion times must be >= 0")
    evals, evecs = np.linalg.eigh(L)
    coeff = evecs.T @ x0
    decay = np.exp(-np.outer(times, evals))
    return (decay * coeff[np.newaxis, :]) @ evecs.T


@dataclass(frozen=True)
class SpectralBundle:
    """Transition matrix, stationary distribution, Laplacian and its spectrum."""

    P: np.ndarray
    pi: np.ndarray
    L: np.ndarray
    eigenvalues: np.ndarray


def _bundle_parts(energies: np.ndarray, assignment: np.ndarray):
    m = _edvw(energies, assignment)
    P = transition_matrix(m)
    pi = stationary_distribution(P)
    L = laplacian(P, pi)
    return P, pi, L


def spectral_bundle(inst: ProblemInstance, *, allow_disconnected: bool = False) -> SpectralBundle:
    """Full spectral chain for an instance.

    A disconnected instance raises unless ``allow_disconnected`` is set, in
    which case the chain is assembled per component with stationary mass
    proportional to component size, so the Laplacian keeps one zero eigenvalue
    per component.
    """
    build_matrices(inst)  # degree checks
    count, agent_label, _ = bipartite_components(inst.incidence())
    n = inst.n_agents
    if count == 1:
        P, pi, L = _bundle_parts(inst.energies, inst.assignment)
        return SpectralBundle(P=P, pi=pi, L=L, eigenvalues=spectrum(L))
    if not allow_disconnected:
        raise DisconnectedError(f"hypergraph has {count} components")
    P = np.zeros((n, n))
    pi = np.zeros(n)
    L = np.zeros((n, n))
    for comp in range(count):
        rows = np.flatnonzero(agent_label == comp)
        if rows.size == 0:
            continue
        cols = np.flatnonzero(inst.assignment[rows].sum(axis=0) > 0)
        sub = inst.assignment[np.ix_(rows, cols)]
        if rows.size == 1:
            # a single agent relaxes nowhere; the 1x1 Laplacian block is zero
            P[rows[0], rows[0]] = 1.0
            pi[rows[0]] = 1.0 / n
            continue
        Pc, pic, Lc = _bundle_parts(inst.energies[cols], sub)
        alpha = rows.size / n
        P[np.ix_(rows, rows)] = Pc
        pi[rows] = alpha * pic
        L[np.ix_(rows, rows)] = alpha * Lc
    return SpectralBundle(P=P, pi=pi, L=L, eigenvalues=spectrum(L))


def mu2_of_assignment(energies: np.ndarray, assignment: np.ndarray) -> float:
    """Algebraic connectivity of the hypergraph induced by positive entries.

    Rows and columns without positive entries are dropped, so partial
    assignments evaluate on their active sub-hypergraph. A sub-hypergraph
    with fewer than two active agents has no mixing to measure and scores 0.
    The caller is responsible for connectivity of the active part.
    """
    assignment = np.asarray(assignment)
    rows = np.flatnonzero(assignment.sum(axis=1) > 0)
    if rows.size < 2:
        return 0.0
    cols = np.flatnonzero(assignment.sum(axis=0) > 0)
    sub = assignment[np.ix_(rows, cols)]
    _, _, L = _bundle_parts(np.asarray(energies)[cols], sub)
    return float(spectrum(L)[1])
