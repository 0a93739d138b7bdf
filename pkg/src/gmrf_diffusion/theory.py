"""Mean and mean-square steady-state theory of the diffusion strategies.

Everything here is deterministic linear algebra over the extended (N*M)
space: block matrices are built with kron(. , I_M).  The error recursion

    err[k] = P2_ext^T (I - M D[k]) P1_ext^T err[k-1] - P2_ext^T M g[k]

drives all results: D = E D[k] gives the mean transition H and step-size
bounds; G = E[g g^T] gives the noise power injected per step; the
steady-state error covariance X solves the fixed point X = R + H X H^T with
R = P2_ext^T M G M P2_ext, from which per-node and network MSD follow as
block traces.  The small-step variance propagator acts on weighting matrices
as Sigma -> H^T Sigma H (dense form: kron(H^T, H^T)); the exact propagator
adds the fourth-moment term E[(D[k] M) kron (D[k] M)], estimated by Monte
Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentModel, NoConvergence, TooLarge, Unstable
from .graph import (
    NetworkTopology,
    oriented_markov_neighborhood,
    spatial_neighborhood,
)
from .signals import RegressorStats

DENSE_CAP = 60  # largest N*M for dense (N*M)^2 x (N*M)^2 materializations
FIXED_POINT_TOL = 1e-12
FIXED_POINT_CAP = 10 ** 6


def extended(mat, m_dim):
    """Block version of an N x N weighting matrix: kron(mat, I_M)."""
    return np.kron(np.asarray(mat, dtype=float), np.eye(m_dim))


def node_update_scalars(topology: NetworkTopology, B, S, stats: RegressorStats):
    """Per-node scalars d_i = sum_j s_ji b_jj power_j (the update-matrix blocks
    are d_i * I_M because regressor covariances are scaled identities)."""
    diag_b = np.diag(np.asarray(B, dtype=float))
    S = np.asarray(S, dtype=float)
    return np.einsum("ji,j,j->i", S, diag_b, stats.per_node_power)


def expected_update_matrix(topology, B, S, stats: RegressorStats):
    """D = E D[k]: block-diagonal with block i = d_i * I_M."""
    return extended(np.diag(node_update_scalars(topology, B, S, stats)), stats.m_dim)


def _oriented_coeffs(topology, B):
    """t_off[j, l] = b_jl on the oriented dependency set (l in A_j)."""
    B = np.asarray(B, dtype=float)
    t_off = np.zeros_like(B)
    for j in range(topology.n_nodes):
        for l in oriented_markov_neighborhood(topology, j):
            t_off[j, l] = B[j, l]
    return t_off


def _blocks_from_draw(diag_b, t_off, S, U):
    cross = t_off @ U
    r_mats = np.einsum("jm,jn->jmn", U, U) * diag_b[:, None, None]
    r_mats += np.einsum("jm,jn->jmn", cross, U)
    r_mats += np.einsum("jm,jn->jmn", U, cross)
    return np.einsum("ji,jmn->imn", S, r_mats)


def update_matrix_sample(topology, B, S, U):
    """One realization D[k] from a regressor draw U (N x M): block i =
    sum_j s_ji [b_jj u_j u_j^T + sum_{l in A_j} b_jl (u_l u_j^T + u_j u_l^T)],
    returned as stacked (N, M, M) blocks.  The oriented cross terms average
    to zero (independent regressors) but carry fourth-moment power."""
    return _blocks_from_draw(np.diag(np.asarray(B, dtype=float)),
                             _oriented_coeffs(topology, B),
                             np.asarray(S, dtype=float), U)


def gradient_noise_scalars(topology: NetworkTopology, B, C, stats: RegressorStats):
    """N x N matrix ghat with E[ghat_i ghat_l^T] = ghat[i,l] * I_M, where
    ghat_i is the gradient noise of potential i at the true parameter."""
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    n = topology.n_nodes
    p = stats.per_node_power
    a_sets = [oriented_markov_neighborhood(topology, i) for i in range(n)]
    ghat = np.zeros((n, n))
    for i in range(n):
        ai = sorted(a_sets[i])
        quad = sum(B[i, j] * B[i, l] * C[j, l] for j in ai for l in ai)
        cross = sum(B[i, j] * C[i, j] for j in ai)
        ghat[i, i] = p[i] * (B[i, i] ** 2 * C[i, i] + 2 * B[i, i] * cross + quad) \
            + C[i, i] * sum(B[i, j] ** 2 * p[j] for j in ai)
    for i in range(n):
        for l in range(n):
            if i == l:
                continue
            val = 0.0
            if l in a_sets[i]:
                val += p[l] * B[i, l] * (
                    B[l, l] * C[i, l]
                    + sum(B[l, m] * C[i, m] for m in a_sets[l])
                )
            if i in a_sets[l]:
                val += p[i] * B[l, i] * (
                    B[i, i] * C[i, l]
                    + sum(B[i, j] * C[j, l] for j in a_sets[i])
                )
            common = a_sets[i] & a_sets[l]
            val += C[i, l] * sum(B[i, j] * B[l, j] * p[j] for j in common)
            ghat[i, l] = val
    return ghat


def noise_moment_matrix(topology, B, C, S, stats: RegressorStats):
    """G = E[g g^T] for the S-weighted gradient noise g = S_ext^T ghat.

    Raises InconsistentModel if B and C are not inverses within 1e-6.
    """
    resid = np.max(np.abs(np.asarray(B) @ np.asarray(C) - np.eye(topology.n_nodes)))
    if resid > 1e-6:
        raise InconsistentModel(f"B*C - I residual {resid:.3e}")
    ghat = gradient_noise_scalars(topology, B, C, stats)
    S = np.asarray(S, dtype=float)
    return extended(S.T @ ghat @ S, stats.m_dim)


def step_matrix(step_sizes, m_dim):
    return extended(np.diag(np.asarray(step_sizes, dtype=float)), m_dim)


def transition_matrix(p1, p2, D, step_sizes):
    """H = P2_ext^T (I - M D) P1_ext^T."""
    p1 = np.asarray(p1, dtype=float)
    m_dim = D.shape[0] // p1.shape[0]
    M = step_matrix(step_sizes, m_dim)
    inner = np.eye(D.shape[0]) - M @ D
    return extended(p2, m_dim).T @ inner @ extended(p1, m_dim).T


class VarianceOperator:
    """Small-step variance propagator as an implicit operator on weighting
    matrices: Sigma -> H^T Sigma H (vec form F = kron(H^T, H^T))."""

    def __init__(self, h):
        self.h = np.asarray(h, dtype=float)
        self.dim = self.h.shape[0]

    def apply(self, sigma):
        return self.h.T @ sigma @ self.h

    def apply_vec(self, vec_sigma):
        return self.apply(vec_sigma.reshape(self.dim, self.dim, order="F")).ravel(order="F")

    def dense(self):
        if self.dim > DENSE_CAP:
            raise TooLarge(f"dense F needs ({self.dim}^2)^2 entries; cap is {DENSE_CAP}")
        return np.kron(self.h.T, self.h.T)

    def spectral_radius(self, n_iters=500, seed=0):
        """Power iteration on the matrix operator; equals rho(H)^2."""
        rng = np.random.default_rng(seed)
        sigma = rng.standard_normal((self.dim, self.dim))
        sigma /= np.linalg.norm(sigma)
        rho = 0.0
        for _ in range(n_iters):
            nxt = self.apply(sigma)
            norm = np.linalg.norm(nxt)
            if norm == 0.0:
                return 0.0
            rho = norm
            sigma = nxt / norm
        return rho


def variance_matrix_approx(h):
    return VarianceOperator(h)


@dataclass
class ExactVarianceResult:
    f_matrix: np.ndarray
    mc_standard_error: float
    d_sample_mean: np.ndarray


def variance_matrix_exact_mc(topology, B, matrices, stats: RegressorStats,
                             step_sizes, n_samples, rng, regressor_sampler=None):
    """Exact variance propagator E[A kron A], A = P1_ext (I - D[k] M) P2_ext,
    with the fourth-moment expectation estimated over regressor draws.

    ``regressor_sampler`` overrides the Gaussian draw (test hook, e.g. for
    deterministic regressors).  Returns the dense matrix, the Monte Carlo
    standard error (largest entry SE from batch means), and the sample mean
    of D[k].
    """
    n, m = topology.n_nodes, stats.m_dim
    dim = n * m
    if dim > DENSE_CAP:
        raise TooLarge(f"N*M = {dim} exceeds dense cap {DENSE_CAP}")
    p1e = extended(matrices.p1, m)
    p2e = extended(matrices.p2, m)
    M = step_matrix(step_sizes, m)
    mean_f = np.zeros((dim * dim, dim * dim))
    sq_f = np.zeros_like(mean_f)
    d_mean = np.zeros((n, m, m))
    n_batches = 10
    per_batch = max(1, n_samples // n_batches)
    scale = np.sqrt(stats.per_node_power)[:, None]
    diag_b = np.diag(np.asarray(B, dtype=float))
    t_off = _oriented_coeffs(topology, B)
    s_mat = np.asarray(matrices.s, dtype=float)
    for _ in range(n_batches):
        batch = np.zeros_like(mean_f)
        for _ in range(per_batch):
            if regressor_sampler is None:
                U = rng.standard_normal((n, m)) * scale
            else:
                U = regressor_sampler(rng)
            blocks = _blocks_from_draw(diag_b, t_off, s_mat, U)
            d_mean += blocks
            dk = np.zeros((dim, dim))
            for i in range(n):
                dk[i * m:(i + 1) * m, i * m:(i + 1) * m] = blocks[i]
            a = p1e @ (np.eye(dim) - dk @ M) @ p2e
            batch += np.einsum("ab,cd->acbd", a, a).reshape(dim * dim, dim * dim)
        batch /= per_batch
        mean_f += batch
        sq_f += batch ** 2
    mean_f /= n_batches
    sq_f /= n_batches
    se = np.sqrt(np.maximum(sq_f - mean_f ** 2, 0.0) / n_batches)
    d_mean /= n_batches * per_batch
    d_dense = np.zeros((dim, dim))
    for i in range(n):
        d_dense[i * m:(i + 1) * m, i * m:(i + 1) * m] = d_mean[i]
    return ExactVarianceResult(mean_f, float(se.max()), d_dense)


def step_size_bounds(topology, B, S, stats: RegressorStats):
    """Per-node mean-stability bounds 2 / lambda_max(sum_j s_ji b_jj R_uj);
    with scaled-identity regressor covariances the eigenvalue is the scalar
    d_i, so bound_i = 2 / d_i."""
    d = node_update_scalars(topology, B, S, stats)
    with np.errstate(divide="ignore"):
        return np.where(d > 0, 2.0 / d, np.inf)


@dataclass
class MeanStabilityReport:
    block_max_norm: float
    spectral_radius_h: float
    mean_stable: bool


def mean_stability_check(h, i_minus_md, block_dim):
    """Block-maximum norm of I - M D (max over node blocks of spectral
    radius), spectral radius of H, and the strict-inequality verdict."""
    dim = i_minus_md.shape[0]
    norms = []
    for start in range(0, dim, block_dim):
        block = i_minus_md[start:start + block_dim, start:start + block_dim]
        norms.append(np.max(np.abs(np.linalg.eigvals(block))))
    bmax = float(max(norms))
    rho = float(np.max(np.abs(np.linalg.eigvals(h))))
    return MeanStabilityReport(bmax, rho, bmax < 1.0)


def error_covariance_fixed_point(h, r, rel_tol=FIXED_POINT_TOL, max_iters=FIXED_POINT_CAP):
    """Solve X = R + H X H^T by fixed-point iteration from X = 0.

    Converges iff rho(H) < 1; terminates when the residual
    ||X - R - H X H^T||_F / ||R||_F drops below rel_tol.
    """
    r = np.asarray(r, dtype=float)
    norm_r = np.linalg.norm(r)
    if norm_r == 0.0:
        return np.zeros_like(r)
    x = np.zeros_like(r)
    for _ in range(max_iters):
        nxt = r + h @ x @ h.T
        change = np.linalg.norm(nxt - x)
        x = nxt
        if change / norm_r <= rel_tol:
            resid = np.linalg.norm(x - r - h @ x @ h.T)
            if resid / norm_r <= rel_tol:
                return x
    raise NoConvergence(f"fixed point not reached in {max_iters} iterations")


def theoretical_msd(h, g, p2, step_sizes, target="network",
                    rel_tol=FIXED_POINT_TOL, max_iters=FIXED_POINT_CAP):
    """Steady-state MSD prediction from the small-step variance recursion.

    Solves the error-covariance fixed point X = R + H X H^T with
    R = P2_ext^T M G M P2_ext; node i's MSD is the trace of block (i, i),
    the network MSD the average over nodes.

    target: "network", "per_node" (returns an N-vector), or a node index.

    Raises Unstable if rho(H) >= 1, NoConvergence past the iteration cap.
    """
    h = np.asarray(h, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    n = p2.shape[0]
    m_dim = h.shape[0] // n
    rho = np.max(np.abs(np.linalg.eigvals(h)))
    if rho >= 1.0:
        raise Unstable(f"spectral radius {rho:.6f} >= 1")
    M = step_matrix(step_sizes, m_dim)
    p2e = extended(p2, m_dim)
    r = p2e.T @ M @ np.asarray(g, dtype=float) @ M @ p2e
    x = error_covariance_fixed_point(h, r, rel_tol=rel_tol, max_iters=max_iters)
    per_node = np.array([
        np.trace(x[i * m_dim:(i + 1) * m_dim, i * m_dim:(i + 1) * m_dim])
        for i in range(n)
    ])
    if target == "network":
        return float(per_node.mean())
    if target == "per_node":
        return per_node
    return float(per_node[int(target)])


def match_step_size(rho_fn, target_rho, mu_max, tol=1e-4, n_scan=64):
    """Bisection on the decreasing branch of mu -> rho to hit target_rho.

    rho(mu) typically falls from 1 at mu -> 0 to a minimum and rises again;
    a coarse scan brackets the decreasing branch, then bisection refines to
    |rho - target| <= tol.
    """
    grid = mu_max * np.linspace(1.0 / n_scan, 1.0, n_scan)
    rhos = [rho_fn(mu) for mu in grid]
    lo, hi = 1e-12 * mu_max, None
    for mu, rho in zip(grid, rhos):
        if rho <= target_rho:
            hi = mu
            break
        lo = mu
    if hi is None:
        hi = grid[int(np.argmin(rhos))]
        if rho_fn(hi) > target_rho:
            # target below the achievable minimum: return the minimizer
            return float(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rho = rho_fn(mid)
        if abs(rho - target_rho) <= tol:
            return float(mid)
        if rho > target_rho:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def spectral_radius(mat):
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def msd_gain_surface(topology, stats: RegressorStats, sigma2, mu, nu_grid,
                     kappa_grid, rel_tol=FIXED_POINT_TOL):
    """Theory-predicted MSD gain (dB) of noise-coupled ATC over the
    noise-agnostic baseline across a (nu, kappa) grid.

    Both run ATC with uniform combination and self-only adaptation; the
    agnostic variant replaces the precision coupling with diag(1/sigma2)
    and its step size is tuned (bisection on the decreasing branch of the
    convergence rate) so rho(H) matches the coupled strategy within 1e-4,
    making the comparison one of steady-state error at equal speed.

    Returns a list of dict rows: nu, kappa, msd_db for both strategies,
    gain_db, and the matched agnostic step size.
    """
    from .gmrf import build_gmrf
    from .strategies import CombinationMatrices, build_combination

    n = topology.n_nodes
    matrices = CombinationMatrices(
        p1=np.eye(n), s=np.eye(n), p2=build_combination(topology, "uniform"))
    b_agn = np.diag(np.full(n, 1.0 / sigma2))
    c_agn = np.diag(np.full(n, sigma2))
    g_agn = noise_moment_matrix(topology, b_agn, c_agn, matrices.s, stats)
    d_agn = expected_update_matrix(topology, b_agn, matrices.s, stats)
    bound_agn = step_size_bounds(topology, b_agn, matrices.s, stats)
    one = np.ones(n)

    def h_agn(mu_a):
        return transition_matrix(matrices.p1, matrices.p2, d_agn, mu_a * one)

    rows = []
    for nu in nu_grid:
        for kappa in kappa_grid:
            model = build_gmrf(topology, sigma2, nu, kappa)
            g = noise_moment_matrix(topology, model.precision, model.covariance,
                                    matrices.s, stats)
            d = expected_update_matrix(topology, model.precision, matrices.s, stats)
            h = transition_matrix(matrices.p1, matrices.p2, d, np.full(n, mu))
            rho_target = spectral_radius(h)
            msd = theoretical_msd(h, g, matrices.p2, np.full(n, mu),
                                  rel_tol=rel_tol)
            mu_a = match_step_size(lambda m_: spectral_radius(h_agn(m_)),
                                   rho_target, float(bound_agn.min()))
            msd_a = theoretical_msd(h_agn(mu_a), g_agn, matrices.p2,
                                    mu_a * one, rel_tol=rel_tol)
            rows.append({
                "nu": float(nu),
                "kappa": float(kappa),
                "msd_db_gmrf": 10.0 * np.log10(msd),
                "msd_db_agnostic": 10.0 * np.log10(msd_a),
                "gain_db": 10.0 * (np.log10(msd_a) - np.log10(msd)),
                "matched_step": float(mu_a),
            })
    return rows
