"""Adaptive strategies: potential gradients, diffusion steps, combination rules.

All step functions are synchronous (every node reads the previous iterate) and
batched: estimates have shape (R, N, M) with R independent Monte Carlo runs in
the leading axis, regressors (R, N, M), observations (R, N).  Single-run
(N, M) inputs are accepted and returned without the batch axis.

Weight conventions follow the combination/adaptation constraints: adaptation
matrices (Q, S) are row-stochastic (S 1 = 1, weights leaving node j sum to
one), combination matrices (W, P1, P2) are column-stochastic (P^T 1 = 1, node
i forms a convex combination over its neighborhood).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, Diverged, InvalidParameter
from .graph import (
    NetworkTopology,
    oriented_markov_neighborhood,
    spatial_neighborhood,
)
from .thresholds import ThresholdSpec, apply_threshold

DIVERGENCE_LIMIT = 1e12
STOCHASTIC_TOL = 1e-12


def ensure_finite(thetas):
    """Raise Diverged if any estimate is non-finite or absurdly large."""
    if not np.all(np.isfinite(thetas)) or np.max(np.abs(thetas)) > DIVERGENCE_LIMIT:
        raise Diverged("estimate left the finite range")
    return thetas


def _batched(arr, nd):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == nd:
        return arr[None, ...], True
    if arr.ndim == nd + 1:
        return arr, False
    raise DimensionMismatch(f"expected {nd} or {nd + 1} axes, got {arr.ndim}")


def oriented_precision(topology: NetworkTopology, B):
    """Coefficient matrices of the potential sums.

    Returns (t_full, t_off): t_off[j, l] = b_jl for l in the oriented set A_j
    (each dependency edge counted once, at its lower-index endpoint), and
    t_full = diag(b_jj) + t_off.
    """
    B = np.asarray(B, dtype=float)
    n = topology.n_nodes
    t_off = np.zeros((n, n))
    for j in range(n):
        for l in oriented_markov_neighborhood(topology, j):
            t_off[j, l] = B[j, l]
    return t_off + np.diag(np.diag(B)), t_off


def potential_gradient(i, U, x, theta, topology: NetworkTopology, B):
    """Stochastic gradient of node i's potential at theta (single sample).

    grad = b_ii u_i (u_i^T theta - x_i)
         + sum over oriented Markov neighbors j of
           b_ij [u_i (u_j^T theta - x_j) + u_j (u_i^T theta - x_i)]
    """
    U = np.asarray(U, dtype=float)
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if U.shape[1] != theta.shape[0] or U.shape[0] != x.shape[0]:
        raise DimensionMismatch("U, x, theta shapes inconsistent")
    e_i = U[i] @ theta - x[i]
    grad = B[i, i] * U[i] * e_i
    for j in oriented_markov_neighborhood(topology, i):
        e_j = U[j] @ theta - x[j]
        grad = grad + B[i, j] * (U[i] * e_j + U[j] * e_i)
    return grad


def adapt(thetas, U, x, mu, s_matrix, t_full, t_off):
    """Adaptation step for all nodes: theta_i - mu_i * sum_j s_ji grad V_j(theta_i).

    The residual of potential j at node i's iterate, E[r,i,j] = u_j^T theta_i
    - x_j, multiplies u-combinations with coefficients from the oriented
    precision entries; two einsum contractions cover the u_l e_j and u_j e_l
    families without forming any M x M outer products.
    """
    E = np.einsum("rim,rjm->rij", thetas, U) - x[:, None, :]
    w = np.einsum("jl,rlm->rjm", t_full, U)
    term1 = np.einsum("ji,rij,rjm->rim", s_matrix, E, w, optimize=True)
    ET = np.einsum("lj,rij->ril", t_off, E)
    term2 = np.einsum("li,rlm,ril->rim", s_matrix, U, ET, optimize=True)
    return thetas - mu[None, :, None] * (term1 + term2)


def combine(thetas, p_matrix):
    """Combination step: theta_i <- sum_j p_ji theta_j."""
    return np.einsum("ji,rjm->rim", p_matrix, thetas)


@dataclass
class AlgorithmState:
    """Per-strategy mutable state: current estimates plus scratch space."""

    thetas: np.ndarray
    scratch: np.ndarray
    step_sizes: np.ndarray


@dataclass(frozen=True)
class CombinationMatrices:
    """Validated (P1, S, P2) triple of the general diffusion recursion."""

    p1: np.ndarray
    s: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        for name, mat, axis in (("p1", self.p1, 0), ("s", self.s, 1), ("p2", self.p2, 0)):
            mat = np.asarray(mat, dtype=float)
            if np.any(mat < 0):
                raise InvalidParameter(f"{name} has negative entries")
            sums = mat.sum(axis=axis)
            if np.max(np.abs(sums - 1.0)) > STOCHASTIC_TOL:
                raise InvalidParameter(f"{name} stochasticity violated: sums {sums}")
            object.__setattr__(self, name, mat)

    def validate_support(self, topology: NetworkTopology):
        for name, mat in (("p1", self.p1), ("s", self.s), ("p2", self.p2)):
            for i in range(topology.n_nodes):
                outside = set(range(topology.n_nodes)) - spatial_neighborhood(topology, i)
                for j in outside:
                    if mat[j, i] != 0.0 or mat[i, j] != 0.0:
                        raise InvalidParameter(
                            f"{name}[{j},{i}] nonzero outside the neighborhood"
                        )
        return self


def build_combination(topology: NetworkTopology, rule, stochasticity="column"):
    """Combination/adaptation matrix for a named rule.

    rule: "identity", "uniform" (node i averages its self-inclusive
    neighborhood), or "metropolis" (symmetric, doubly stochastic).
    stochasticity selects which axis sums to one: "column" for combination
    matrices (W, P1, P2), "row" for adaptation matrices (Q, S).
    """
    n = topology.n_nodes
    if rule == "identity":
        return np.eye(n)
    if rule == "uniform":
        mat = np.zeros((n, n))
        for i in range(n):
            hood = spatial_neighborhood(topology, i)
            for j in hood:
                if stochasticity == "column":
                    mat[j, i] = 1.0 / len(hood)
                else:
                    mat[i, j] = 1.0 / len(hood)
        return mat
    if rule == "metropolis":
        deg = [len(spatial_neighborhood(topology, i)) - 1 for i in range(n)]
        mat = np.zeros((n, n))
        for i, j in topology.comm_edges:
            mat[i, j] = mat[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
        np.fill_diagonal(mat, 1.0 - mat.sum(axis=0))
        return mat
    raise InvalidParameter(f"unknown combination rule {rule!r}")


def _finish(out, single, check):
    if check:
        ensure_finite(out)
    return out[0] if single else out


def atc_step(thetas, q, w, U, x, mu, topology, B, check=True):
    """Adapt-then-combine: psi = adapt(theta), theta <- W-combination of psi."""
    thetas, single = _batched(thetas, 2)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    t_full, t_off = oriented_precision(topology, B)
    psi = adapt(thetas, U, x, mu, q, t_full, t_off)
    return _finish(combine(psi, w), single, check)


def cta_step(thetas, q, w, U, x, mu, topology, B, check=True):
    """Combine-then-adapt: chi = W-combination, theta <- adapt(chi)."""
    thetas, single = _batched(thetas, 2)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    t_full, t_off = oriented_precision(topology, B)
    chi = combine(thetas, w)
    return _finish(adapt(chi, U, x, mu, q, t_full, t_off), single, check)


def acs_step(thetas, q, w, spec: ThresholdSpec, U, x, mu, topology, B, check=True):
    """Adapt, combine, then sparsify the combined estimate."""
    thetas, single = _batched(thetas, 2)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    t_full, t_off = oriented_precision(topology, B)
    zeta = combine(adapt(thetas, U, x, mu, q, t_full, t_off), w)
    return _finish(apply_threshold(spec, zeta), single, check)


def asc_step(thetas, q, w, spec: ThresholdSpec, U, x, mu, topology, B, check=True):
    """Adapt, sparsify the intermediate estimate, then combine."""
    thetas, single = _batched(thetas, 2)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    t_full, t_off = oriented_precision(topology, B)
    zeta = apply_threshold(spec, adapt(thetas, U, x, mu, q, t_full, t_off))
    return _finish(combine(zeta, w), single, check)


def general_diffusion_step(thetas, matrices: CombinationMatrices, U, x, mu,
                           topology, B, check=True):
    """General three-stage recursion: P1-combine, S-weighted adapt, P2-combine."""
    thetas, single = _batched(thetas, 2)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    t_full, t_off = oriented_precision(topology, B)
    phi = combine(thetas, matrices.p1)
    psi = adapt(phi, U, x, mu, matrices.s, t_full, t_off)
    return _finish(combine(psi, matrices.p2), single, check)


def centralized_lms_step(theta, U, x, B, mu, check=True):
    """Fusion-center update: theta + mu U^T B (x - U theta)."""
    theta, single = _batched(theta, 1)
    U, _ = _batched(U, 2)
    x, _ = _batched(x, 1)
    res = x - np.einsum("rnm,rm->rn", U, theta)
    out = theta + mu * np.einsum("rnm,rn->rm", U, res @ np.asarray(B).T)
    if check:
        ensure_finite(out)
    return out[0] if single else out
