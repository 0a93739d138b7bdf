"""Streaming data of the linear observation model.

Each node i observes x_i[k] = u_i[k]^T theta0[k] + v_i[k]: white Gaussian
regressors with per-node power, a true parameter that is static, sparse, or
an AR(1) tracking process, and GMRF noise sampled elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, InvalidSupport


@dataclass(frozen=True)
class RegressorStats:
    """Regressor length M and per-node powers; R_{u,i} = power_i * I_M."""

    m_dim: int
    per_node_power: np.ndarray

    def __post_init__(self):
        powers = np.asarray(self.per_node_power, dtype=float)
        if powers.ndim != 1:
            raise InvalidParameter("per_node_power must be a 1-D array")
        if np.any(powers <= 0.0):
            raise InvalidParameter("regressor powers must be strictly positive")
        if self.m_dim < 1:
            raise InvalidParameter("m_dim must be >= 1")
        object.__setattr__(self, "per_node_power", powers)

    @property
    def n_nodes(self):
        return self.per_node_power.shape[0]


def draw_regressors(stats: RegressorStats, rng, size=None):
    """White Gaussian regressors, independent across nodes, time, and entries.

    Returns shape (N, M), or (size, N, M) when ``size`` is given.
    """
    scale = np.sqrt(stats.per_node_power)[:, None]
    if size is None:
        return rng.standard_normal((stats.n_nodes, stats.m_dim)) * scale
    return rng.standard_normal((size, stats.n_nodes, stats.m_dim)) * scale


def observe(theta, U, v):
    """x_i = u_i^T theta + v_i, batched over any leading axes of U and v."""
    theta = np.asarray(theta, dtype=float)
    U = np.asarray(U, dtype=float)
    v = np.asarray(v, dtype=float)
    if U.shape[-1] != theta.shape[-1]:
        raise DimensionMismatch(f"regressor length {U.shape[-1]} vs theta {theta.shape[-1]}")
    x = U @ theta[..., None]
    x = x[..., 0] + v
    if x.shape != v.shape:
        raise DimensionMismatch(f"noise shape {v.shape} incompatible with {U.shape}")
    return x


@dataclass(frozen=True)
class ParameterProcess:
    """True parameter law: static, static-sparse, or AR(1) tracking.

    zero_intervals lists (start, end, component) triples or (start, end)
    pairs; for iterations k with start <= k < end the component (or, for
    pairs, the whole vector) is forced to zero.  The AR state is overwritten,
    so the process re-grows from zero afterwards.
    """

    kind: str = "static"
    theta0: np.ndarray | None = None
    support_size: int | None = None
    value: float = 1.0
    ar_coeff: float = 0.0
    drive_mean: float = 0.0
    drive_var: float = 0.0
    zero_intervals: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("static", "static-sparse", "ar-tracking"):
            raise InvalidParameter(f"unknown parameter kind {self.kind!r}")
        if self.kind == "ar-tracking" and not abs(self.ar_coeff) < 1.0:
            raise InvalidParameter("ar-tracking requires |ar_coeff| < 1")
        if self.theta0 is not None:
            object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=float))


def make_sparse_parameter(m_dim, support_size, value, rng):
    """Vector with ``support_size`` entries equal to ``value`` at random positions."""
    if not 0 <= support_size <= m_dim:
        raise InvalidSupport(f"support {support_size} not in [0, {m_dim}]")
    theta = np.zeros(m_dim)
    idx = rng.choice(m_dim, size=support_size, replace=False)
    theta[idx] = value
    return theta


def initial_parameter(process: ParameterProcess, m_dim, rng):
    """theta0[0] for a run; sparse supports are drawn from the given stream."""
    if process.kind == "static-sparse":
        if process.support_size is None:
            raise InvalidParameter("static-sparse requires support_size")
        return make_sparse_parameter(m_dim, process.support_size, process.value, rng)
    if process.theta0 is not None:
        theta = np.asarray(process.theta0, dtype=float)
        if theta.shape != (m_dim,):
            raise DimensionMismatch(f"theta0 shape {theta.shape} vs m_dim {m_dim}")
        return theta.copy()
    return np.zeros(m_dim)


def _apply_zeroing(process: ParameterProcess, theta, k):
    for interval in process.zero_intervals:
        start, end = interval[0], interval[1]
        if start <= k < end:
            if len(interval) == 2:
                theta[:] = 0.0
            else:
                theta[interval[2]] = 0.0
    return theta


def step_parameter(process: ParameterProcess, state, k, rng):
    """Advance the true parameter to iteration k.

    Static kinds return the state unchanged; ar-tracking applies
    theta <- a * theta + s[k] with s ~ N(drive_mean * 1, drive_var * I),
    then any configured zeroing intervals.
    """
    if process.kind in ("static", "static-sparse"):
        return state
    s = process.drive_mean + np.sqrt(process.drive_var) * rng.standard_normal(state.shape)
    theta = process.ar_coeff * state + s
    return _apply_zeroing(process, theta, k)
