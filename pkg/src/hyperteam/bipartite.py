"""Bipartite lift of the hypergraph walk.

Stacking agents then tasks gives the (N+K) adjacency

    A = [[0, W], [R^T, 0]]

whose random walk alternates strictly between the two sides. Squaring the
walk matrix block-diagonalizes it; the upper-left block is exactly the vertex
transition matrix of the hypergraph walk, which is what makes the lift a
useful consistency check.

The alternating walk is 2-periodic, so its stationary distribution is taken
in the Cesaro / eigenvector sense: the left eigenvector at eigenvalue 1,
normalized to total mass 1, which puts mass 1/2 on each side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import DisconnectedError
from .instance import ProblemInstance, is_connected

__all__ = [
    "BipartiteBundle",
    "bipartite_adjacency",
    "bipartite_transition",
    "two_step",
    "bipartite_laplacian",
    "two_step_laplacian",
    "bipartite_connectivity",
    "bipartite_bundle",
]


def _blocks(energies: np.ndarray, assignment: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = spectral._edvw(np.asarray(energies), np.asarray(assignment))
    return m.W, m.R


def bipartite_adjacency(inst: ProblemInstance) -> np.ndarray:
    """(N+K) x (N+K) adjacency with W and R^T off-diagonal blocks."""
    W, R = _blocks(inst.energies, inst.assignment)
    n, k = W.shape
    A = np.zeros((n + k, n + k))
    A[:n, n:] = W
    A[n:, :n] = R.T
    return A


def _transition_from_blocks(W: np.ndarray, R: np.ndarray) -> np.ndarray:
    n, k = W.shape
    d_v = W.sum(axis=1)
    d_e = R.sum(axis=0)
    if np.any(d_v == 0) or np.any(d_e == 0):
        raise ValueError("bipartite walk needs positive degrees on both sides")
    P = np.zeros((n + k, n + k))
    P[:n, n:] = W / d_v[:, np.newaxis]
    P[n:, :n] = (R / d_e[np.newaxis, :]).T
    return P


def bipartite_transition(inst: ProblemInstance) -> np.ndarray:
    """Row-stochastic walk matrix on the stacked agent/task vertex set."""
    W, R = _blocks(inst.energies, inst.assignment)
    return _transition_from_blocks(W, R)


def two_step(P_b: np.ndarray) -> np.ndarray:
    """Square of the alternating walk; block-diagonal by construction."""
    return P_b @ P_b


def _eigenvector_stationary(P: np.ndarray) -> np.ndarray:
    """Left eigenvector at eigenvalue 1, sum-normalized.

    Works for periodic chains too, where the power method would oscillate.
    """
    evals, evecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(evals - 1.0)))
    if abs(evals[idx] - 1.0) > 1e-6:
        raise ValueError("chain has no eigenvalue at 1")
    pi = np.real(evecs[:, idx])
    pi = pi / pi.sum()
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def bipartite_laplacian(P_b: np.ndarray) -> np.ndarray:
    """Laplacian of the alternating walk under its eigenvector stationary."""
    pi = _eigenvector_stationary(P_b)
    return spectral.laplacian(P_b, pi)


def two_step_laplacian(P_star: np.ndarray, n_agents: int) -> np.ndarray:
    """Laplacian of the squared walk.

    The squared walk is block-diagonal, so each block gets its own stationary
    distribution, and the blocks carry mass 1/2 each to match the alternating
    walk's long-run occupancy. The agent block of the result equals half the
    hypergraph Laplacian.
    """
    n = n_agents
    upper = P_star[:n, :n]
    lower = P_star[n:, n:]
    off_upper = np.abs(P_star[:n, n:]).max() if P_star.shape[0] > n else 0.0
    off_lower = np.abs(P_star[n:, :n]).max() if P_star.shape[0] > n else 0.0
    if max(off_upper, off_lower) > 1e-10:
        raise ValueError("two-step matrix is not block-diagonal; wrong split size?")
    pi = np.concatenate(
        [
            0.5 * spectral.stationary_distribution(upper),
            0.5 * _eigenvector_stationary(lower),
        ]
    )
    return spectral.laplacian(P_star, pi)


def bipartite_connectivity(inst: ProblemInstance) -> float:
    """Second-smallest eigenvalue of the alternating-walk Laplacian."""
    if not is_connected(inst):
        raise DisconnectedError("bipartite connectivity needs a connected instance")
    L = bipartite_laplacian(bipartite_transition(inst))
    return float(spectral.spectrum(L)[1])


@dataclass(frozen=True)
class BipartiteBundle:
    """All lift-level objects for one instance."""

    adjacency: np.ndarray
    P: np.ndarray
    pi: np.ndarray
    L: np.ndarray
    P_star: np.ndarray
    L_star: np.ndarray


def bipartite_bundle(inst: ProblemInstance) -> BipartiteBundle:
    if not is_connected(inst):
        raise DisconnectedError("bipartite bundle needs a connected instance")
    A = bipartite_adjacency(inst)
    P_b = bipartite_transition(inst)
    pi_b = _eigenvector_stationary(P_b)
    L_b = spectral.laplacian(P_b, pi_b)
    P_star = two_step(P_b)
    L_star = two_step_laplacian(P_star, inst.n_agents)
    return BipartiteBundle(adjacency=A, P=P_b, pi=pi_b, L=L_b, P_star=P_star, L_star=L_star)
