"""Component-wise thresholding operators for sparsity-aware diffusion.

Four shrinkage families: soft (LASSO), reweighted-l1, non-negative garotte,
and an l0-norm approximation.  gamma = 0 makes every operator the exact
identity, which the sparse strategies rely on to reduce to their plain
counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec

KINDS = ("soft", "reweighted_l1", "garotte", "l0")


@dataclass(frozen=True)
class ThresholdSpec:
    """Operator selection and parameters.

    gamma >= 0 (0 is the identity); l0 additionally needs beta > 0 with
    beta < sqrt(1/gamma); reweighted_l1 uses epsilon in (0, 0.1], default 0.01.
    """

    kind: str
    gamma: float
    beta: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown threshold kind {self.kind!r}")
        if self.gamma < 0.0:
            raise InvalidSpec("gamma must be >= 0")
        if self.kind == "l0":
            if self.beta is None or self.beta <= 0.0:
                raise InvalidSpec("l0 threshold requires beta > 0")
            if self.gamma > 0.0 and self.beta >= np.sqrt(1.0 / self.gamma):
                raise InvalidSpec("l0 threshold requires beta < sqrt(1/gamma)")
        if self.kind == "reweighted_l1":
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", 0.01)
            elif not 0.0 < self.epsilon <= 0.1:
                raise InvalidSpec("epsilon must lie in (0, 0.1]")


def apply_threshold(spec: ThresholdSpec, x):
    """Apply the selected operator component-wise; any array shape."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    if spec.kind == "soft":
        return np.where(ax > spec.gamma, x - spec.gamma * np.sign(x), 0.0)
    if spec.kind == "reweighted_l1":
        y = spec.epsilon + ax
        thresh = np.where(y <= 1.0, spec.gamma / y, spec.gamma)
        return np.where(ax > thresh, x - spec.gamma * np.sign(x), 0.0)
    if spec.kind == "garotte":
        # evaluated as x - gamma^2/x outside the dead zone (no cancellation)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            shrunk = x - spec.gamma ** 2 / x
        return np.where(ax > spec.gamma, shrunk, 0.0)
    # l0: identity above 1/beta, affine shrink in (gamma*beta, 1/beta), dead zone below
    gb = spec.gamma * spec.beta
    shrunk = (x - gb * np.sign(x)) / (1.0 - spec.gamma * spec.beta ** 2)
    return np.where(ax >= 1.0 / spec.beta, x, np.where(ax > gb, shrunk, 0.0))


def support(x, tol=0.0):
    """Indices with |x_m| > tol."""
    if tol < 0:
        raise InvalidSpec("tol must be >= 0")
    return frozenset(int(i) for i in np.flatnonzero(np.abs(np.asarray(x)) > tol))


def threshold_bound(spec: ThresholdSpec, m_dim):
    """Vector-norm bound c1 on the sparsification perturbation: gamma*sqrt(M),
    or gamma*beta*sqrt(M) for the l0 operator."""
    if spec.kind == "l0":
        return spec.gamma * spec.beta * np.sqrt(m_dim)
    return spec.gamma * np.sqrt(m_dim)
