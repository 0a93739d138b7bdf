"""GMRF noise model: covariance and sparse precision on an acyclic dependency graph.

The measurement noise across nodes is jointly Gaussian with zero mean.  Edge
covariances follow the exponential-decay model c_ij = sigma2 * nu * exp(-kappa
* d_ij) on dependency edges, the marginal variance is sigma2 everywhere, and
the precision matrix B = C^-1 inherits the sparsity of the dependency graph.
For acyclic (tree/forest) graphs both directions are available in closed form:
the precision entries come from the per-edge 2x2 marginals, and the full
covariance extends the edge covariances by correlation products along paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    InvalidParameter,
    NotPositiveDefinite,
    SingularPair,
)
from .graph import NetworkTopology, is_acyclic_dependency, markov_neighborhood

# invariant tolerances
INVERSE_RESIDUAL_TOL = 1e-8
STRUCTURAL_ZERO_TOL = 1e-10


def build_covariance_edges(topology: NetworkTopology, sigma2, nugget, kappa):
    """Per-edge covariances c_ij = sigma2 * nugget * exp(-kappa * d_ij).

    Returns
    -------
    dict
        Mapping (i, j) with i < j over dependency edges to covariance values.

    Raises
    ------
    InvalidParameter
        If nugget is outside the open interval (0, 1) (positive definiteness
        on trees requires g(0) = nu < 1), kappa < 0, or sigma2 <= 0.
    ConfigError
        If the dependency graph has a cycle.
    """
    if not (0.0 < nugget < 1.0):
        raise InvalidParameter(f"nugget must be in (0,1), got {nugget}")
    if kappa < 0.0:
        raise InvalidParameter(f"kappa must be >= 0, got {kappa}")
    if sigma2 <= 0.0:
        raise InvalidParameter(f"sigma2 must be > 0, got {sigma2}")
    if not is_acyclic_dependency(topology):
        raise ConfigError("dependency graph must be acyclic for the tree closed forms")
    return {
        (i, j): sigma2 * nugget * np.exp(-kappa * topology.distance(i, j))
        for i, j in topology.dep_edges
    }


def precision_from_tree_covariance(topology: NetworkTopology, edge_covariances, sigma2):
    """Closed-form precision matrix of a tree-structured field.

    For each dependency edge {i,j}: b_ij = -c_ij / (c_ii c_jj - c_ij^2).
    Diagonal: b_ii = 1/c_ii + sum over Markov neighbors j of
    (c_ij^2 / c_ii) / (c_ii c_jj - c_ij^2).  The sum runs over all of M_i;
    ground truth is the numeric inverse, exercised by the tests.

    Raises
    ------
    SingularPair
        If some edge has c_ii c_jj - c_ij^2 <= 0.
    """
    if not is_acyclic_dependency(topology):
        raise ConfigError("dependency graph must be acyclic for the tree closed forms")
    n = topology.n_nodes
    b = np.zeros((n, n))
    np.fill_diagonal(b, 1.0 / sigma2)
    for (i, j), c in edge_covariances.items():
        det = sigma2 * sigma2 - c * c
        if det <= 0.0:
            raise SingularPair(f"edge ({i},{j}) covariance {c} makes 2x2 marginal singular")
        b[i, j] = b[j, i] = -c / det
        extra = (c * c / sigma2) / det
        b[i, i] += extra
        b[j, j] += extra
    return b


def tree_covariance_extension(topology: NetworkTopology, edge_covariances, sigma2):
    """Full covariance implied by the tree model: correlations multiply along paths.

    Nodes in different dependency components are independent (zero covariance).
    The diagonal equals sigma2 exactly by construction.
    """
    n = topology.n_nodes
    rho = np.zeros((n, n))  # pairwise correlations
    np.fill_diagonal(rho, 1.0)
    adj = {i: {} for i in range(n)}
    for (i, j), c in edge_covariances.items():
        r = c / sigma2
        adj[i][j] = r
        adj[j][i] = r
    for root in range(n):
        # BFS accumulating correlation products outward from root
        stack = [(root, 1.0, -1)]
        while stack:
            u, r, parent = stack.pop()
            rho[root, u] = r
            for v, rv in adj[u].items():
                if v != parent:
                    stack.append((v, r * rv, u))
    return sigma2 * rho


def full_covariance(B):
    """Dense covariance C = B^-1; raises NotPositiveDefinite if B is not SPD."""
    B = np.asarray(B, dtype=float)
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("precision matrix is not positive definite") from exc
    eye = np.eye(B.shape[0])
    Linv = np.linalg.solve(L, eye)
    C = Linv.T @ Linv
    return 0.5 * (C + C.T)


@dataclass(frozen=True)
class GmrfModel:
    """Validated noise model: covariance, precision, and cached sampling factor."""

    sigma2: float
    nugget: float
    kappa: float
    covariance: np.ndarray
    precision: np.ndarray
    chol_factor: np.ndarray


def build_gmrf(topology: NetworkTopology, sigma2, nugget, kappa,
               covariance_override=None) -> GmrfModel:
    """Construct and validate the noise model for a topology.

    With ``covariance_override`` the explicit matrix is used instead of the
    edge formulas (test hook); its diagonal must still equal sigma2.

    Raises
    ------
    NotPositiveDefinite, InvalidParameter, SingularPair, ConfigError
    """
    if covariance_override is not None:
        C = np.asarray(covariance_override, dtype=float)
        if C.shape != (topology.n_nodes, topology.n_nodes):
            raise ConfigError("covariance override has wrong shape")
        if not np.allclose(np.diag(C), sigma2, rtol=0, atol=1e-12):
            raise ConfigError("covariance override diagonal must equal sigma2")
        B = np.linalg.inv(C)
        B = 0.5 * (B + B.T)
    else:
        edges = build_covariance_edges(topology, sigma2, nugget, kappa)
        B = precision_from_tree_covariance(topology, edges, sigma2)
        C = tree_covariance_extension(topology, edges, sigma2)
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("covariance matrix is not positive definite") from exc
    resid = np.max(np.abs(B @ C - np.eye(topology.n_nodes)))
    if resid > INVERSE_RESIDUAL_TOL:
        raise ConfigError(f"B*C - I residual {resid:.3e} exceeds {INVERSE_RESIDUAL_TOL}")
    return GmrfModel(float(sigma2), float(nugget), float(kappa), C, B, L)


def sample_noise(model: GmrfModel, rng, size=None):
    """Draw zero-mean noise with covariance C: v = L z, z iid standard normal.

    ``size=None`` returns one N-vector; an integer returns shape (size, N).
    """
    n = model.covariance.shape[0]
    if size is None:
        z = rng.standard_normal(n)
        return model.chol_factor @ z
    z = rng.standard_normal((size, n))
    return z @ model.chol_factor.T


def validate_markov_structure(model: GmrfModel, topology: NetworkTopology):
    """Diagnostic report on sparsity, inverse consistency, and definiteness."""
    n = topology.n_nodes
    nonedge_mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(nonedge_mask, False)
    for i in range(n):
        for j in markov_neighborhood(topology, i):
            nonedge_mask[i, j] = False
    offdiag = np.abs(model.precision)[nonedge_mask]
    max_nonedge = float(offdiag.max()) if offdiag.size else 0.0
    max_residual = float(np.max(np.abs(model.precision @ model.covariance - np.eye(n))))
    try:
        np.linalg.cholesky(model.covariance)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    return {
        "max_nonedge_abs_precision": max_nonedge,
        "max_inverse_residual": max_residual,
        "positive_definite": pd,
        "ok": pd
        and max_nonedge <= STRUCTURAL_ZERO_TOL
        and max_residual <= INVERSE_RESIDUAL_TOL,
    }
