"""Declarative experiment configuration.

A scenario file is YAML (JSON is a subset, so plain JSON files load too)
with the sections below; unknown keys are rejected so typos fail loudly.

    master_seed: 42
    n_runs: 100
    n_iters: 2000
    steady_window: 200          # samples averaged after convergence
    allow_unstable: false
    topology:
      kind: generated           # or explicit
      n_nodes: 20
      comm_radius: null         # optional override for generated layouts
      side: 1.0                 # deployment square side (distance scale)
      # explicit layouts instead give:
      # positions: [[x, y], ...]
      # comm_edges: [[i, j], ...]
      # dep_edges: [[i, j], ...]
    gmrf:
      sigma2: 0.0157
      nu: 0.9
      kappa: 0.1
    signals:
      m_dim: 10
      regressor_power: {low: 0.5, high: 2.0}   # or scalar, or list of N
    parameter:
      kind: static              # static | static-sparse | ar-tracking
      # theta0: [..]            # fixed vector; omitted -> Gaussian per run
      # support_size, value     # static-sparse
      # ar_coeff, drive_mean, drive_var,
      # zero_intervals: [[start, end]] (whole vector) or [[start, end, comp]]
    algorithms:
      - kind: atc_gmrf          # see ALGORITHM_KINDS
        name: ATC-GMRF          # optional display label
        step_size: 3.0e-4       # scalar or per-node list
        q_rule: identity        # identity | uniform | metropolis
        w_rule: uniform
        # threshold: {kind: l0, gamma: 1.0e-4, beta: 50}   # acs/asc only
        # agnostic_b: inverse_variance | identity          # *_agnostic only
    track_components: [0, 24]   # per-iteration estimate traces (fig7-style)
    track_node: 0
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, InvalidSpec
from .thresholds import ThresholdSpec

ALGORITHM_KINDS = (
    "standalone", "centralized", "atc_gmrf", "cta_gmrf",
    "atc_agnostic", "cta_agnostic", "acs", "asc",
)
GMRF_KINDS = frozenset({"atc_gmrf", "cta_gmrf", "acs", "asc"})
SPARSE_KINDS = frozenset({"acs", "asc"})
COMBINATION_RULES = ("identity", "uniform", "metropolis")
PARAMETER_KINDS = ("static", "static-sparse", "ar-tracking")

DEFAULT_LABELS = {
    "standalone": "LMS",
    "centralized": "Centralized LMS",
    "atc_gmrf": "ATC-GMRF",
    "cta_gmrf": "CTA-GMRF",
    "atc_agnostic": "ATC",
    "cta_agnostic": "CTA",
    "acs": "ACS-GMRF",
    "asc": "ASC-GMRF",
}


def _take(section, name, allowed):
    if not isinstance(section, dict):
        raise InvalidSpec(f"{name} must be a mapping, got {type(section).__name__}")
    unknown = set(section) - set(allowed)
    if unknown:
        raise InvalidSpec(f"unknown keys in {name}: {sorted(unknown)}")
    return section


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "generated"
    n_nodes: int | None = None
    comm_radius: float | None = None
    side: float = 1.0
    positions: tuple | None = None
    comm_edges: tuple | None = None
    dep_edges: tuple | None = None

    def __post_init__(self):
        if self.side <= 0:
            raise InvalidSpec("side must be positive")
        if self.kind == "generated":
            if not self.n_nodes or self.n_nodes < 1:
                raise InvalidSpec("generated topology needs n_nodes >= 1")
        elif self.kind == "explicit":
            if self.positions is None or self.comm_edges is None \
                    or self.dep_edges is None:
                raise InvalidSpec(
                    "explicit topology needs positions, comm_edges, dep_edges")
        else:
            raise InvalidSpec(f"unknown topology kind {self.kind!r}")


@dataclass(frozen=True)
class GmrfSpec:
    sigma2: float
    nu: float
    kappa: float


@dataclass(frozen=True)
class SignalSpec:
    m_dim: int
    power_fixed: tuple | None = None     # scalar broadcast or per-node tuple
    power_range: tuple | None = None     # (low, high) drawn once per scenario

    def __post_init__(self):
        if self.m_dim < 1:
            raise InvalidSpec("m_dim must be >= 1")
        if (self.power_fixed is None) == (self.power_range is None):
            raise InvalidSpec("exactly one of fixed/range regressor power")
        if self.power_range is not None:
            lo, hi = self.power_range
            if not 0 < lo <= hi:
                raise InvalidSpec(f"bad power range ({lo}, {hi})")


@dataclass(frozen=True)
class ParameterSpec:
    kind: str = "static"
    theta0: tuple | None = None
    support_size: int | None = None
    value: float = 1.0
    ar_coeff: float = 0.98
    drive_mean: float = 0.01
    drive_var: float = 0.04
    zero_intervals: tuple = ()

    def __post_init__(self):
        if self.kind not in PARAMETER_KINDS:
            raise InvalidSpec(f"unknown parameter kind {self.kind!r}")
        if self.kind == "static-sparse" and self.support_size is None:
            raise InvalidSpec("static-sparse requires support_size")


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: str
    name: str = ""
    step_size: float | tuple = 0.0
    q_rule: str = "identity"
    w_rule: str = "uniform"
    threshold: ThresholdSpec | None = None
    agnostic_b: str = "inverse_variance"

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise InvalidSpec(f"unknown algorithm kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", DEFAULT_LABELS[self.kind])
        steps = np.atleast_1d(np.asarray(self.step_size, dtype=float))
        if np.any(steps <= 0):
            raise InvalidSpec(f"{self.name}: step sizes must be positive")
        if self.q_rule not in COMBINATION_RULES:
            raise InvalidSpec(f"unknown q_rule {self.q_rule!r}")
        if self.w_rule not in COMBINATION_RULES:
            raise InvalidSpec(f"unknown w_rule {self.w_rule!r}")
        if self.kind in SPARSE_KINDS and self.threshold is None:
            raise InvalidSpec(f"{self.kind} requires a threshold spec")
        if self.kind not in SPARSE_KINDS and self.threshold is not None:
            raise InvalidSpec(f"{self.kind} does not take a threshold spec")
        if self.agnostic_b not in ("inverse_variance", "identity"):
            raise InvalidSpec(f"unknown agnostic_b {self.agnostic_b!r}")


@dataclass(frozen=True)
class Scenario:
    topology: TopologySpec
    gmrf: GmrfSpec
    signals: SignalSpec
    algorithms: tuple
    parameter: ParameterSpec = ParameterSpec()
    n_iters: int = 1000
    n_runs: int = 1
    steady_window: int = 200
    master_seed: int = 0
    allow_unstable: bool = False
    track_components: tuple = ()
    track_node: int = 0

    def __post_init__(self):
        if self.n_runs < 1:
            raise InvalidSpec("n_runs must be >= 1")
        if self.n_iters < 1:
            raise InvalidSpec("n_iters must be >= 1")
        if not self.steady_window or self.steady_window >= self.n_iters:
            raise InvalidSpec(
                f"steady_window {self.steady_window} must be in [1, n_iters)")
        if not self.algorithms:
            raise InvalidSpec("at least one algorithm required")
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise InvalidSpec(f"duplicate algorithm names: {names}")


def _edges(raw, name):
    try:
        return tuple((int(i), int(j)) for i, j in raw)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"{name} must be a list of [i, j] pairs") from exc


def _topology_from_dict(raw):
    raw = _take(raw, "topology",
                ["kind", "n_nodes", "comm_radius", "side", "positions",
                 "comm_edges", "dep_edges"])
    kind = raw.get("kind", "generated")
    if kind == "explicit":
        return TopologySpec(
            kind="explicit",
            positions=tuple(tuple(float(c) for c in p) for p in raw["positions"]),
            comm_edges=_edges(raw.get("comm_edges", []), "comm_edges"),
            dep_edges=_edges(raw.get("dep_edges", []), "dep_edges"),
        )
    return TopologySpec(kind=kind, n_nodes=raw.get("n_nodes"),
                        comm_radius=raw.get("comm_radius"),
                        side=float(raw.get("side", 1.0)))


def _signals_from_dict(raw):
    raw = _take(raw, "signals", ["m_dim", "regressor_power"])
    power = raw.get("regressor_power", 1.0)
    fixed = span = None
    if isinstance(power, dict):
        power = _take(power, "regressor_power", ["low", "high"])
        span = (float(power["low"]), float(power["high"]))
    elif isinstance(power, (list, tuple)):
        fixed = tuple(float(p) for p in power)
    else:
        fixed = (float(power),)
    return SignalSpec(m_dim=int(raw["m_dim"]), power_fixed=fixed,
                      power_range=span)


def _parameter_from_dict(raw):
    raw = _take(raw, "parameter",
                ["kind", "theta0", "support_size", "value", "ar_coeff",
                 "drive_mean", "drive_var", "zero_intervals"])
    theta0 = raw.get("theta0")
    if theta0 is not None:
        theta0 = tuple(float(t) for t in theta0)
    intervals = []
    for entry in raw.get("zero_intervals", []):
        if len(entry) not in (2, 3):
            raise InvalidSpec(
                "zero_intervals entries are [start, end] or [start, end, comp]")
        intervals.append(tuple(int(v) for v in entry))
    intervals = tuple(intervals)
    return ParameterSpec(
        kind=raw.get("kind", "static"),
        theta0=theta0,
        support_size=raw.get("support_size"),
        value=float(raw.get("value", 1.0)),
        ar_coeff=float(raw.get("ar_coeff", 0.98)),
        drive_mean=float(raw.get("drive_mean", 0.01)),
        drive_var=float(raw.get("drive_var", 0.04)),
        zero_intervals=intervals,
    )


def _threshold_from_dict(raw):
    if raw is None:
        return None
    raw = _take(raw, "threshold", ["kind", "gamma", "beta", "epsilon"])
    kwargs = {"kind": raw["kind"], "gamma": float(raw["gamma"])}
    if "beta" in raw:
        kwargs["beta"] = float(raw["beta"])
    if "epsilon" in raw:
        kwargs["epsilon"] = float(raw["epsilon"])
    return ThresholdSpec(**kwargs)


def _algorithm_from_dict(raw):
    raw = _take(raw, "algorithm",
                ["kind", "name", "step_size", "q_rule", "w_rule",
                 "threshold", "agnostic_b"])
    step = raw.get("step_size")
    if step is None:
        raise InvalidSpec("algorithm needs a step_size")
    if isinstance(step, (list, tuple)):
        step = tuple(float(s) for s in step)
    else:
        step = float(step)
    return AlgorithmSpec(
        kind=raw["kind"],
        name=raw.get("name", ""),
        step_size=step,
        q_rule=raw.get("q_rule", "identity"),
        w_rule=raw.get("w_rule", "uniform"),
        threshold=_threshold_from_dict(raw.get("threshold")),
        agnostic_b=raw.get("agnostic_b", "inverse_variance"),
    )


def scenario_from_dict(raw):
    raw = _take(raw, "scenario",
                ["topology", "gmrf", "signals", "parameter", "algorithms",
                 "n_iters", "n_runs", "steady_window", "master_seed",
                 "allow_unstable", "track_components", "track_node"])
    for required in ("topology", "gmrf", "signals", "algorithms"):
        if required not in raw:
            raise InvalidSpec(f"missing required section {required!r}")
    gmrf_raw = _take(raw["gmrf"], "gmrf", ["sigma2", "nu", "kappa"])
    algorithms = raw["algorithms"]
    if not isinstance(algorithms, list):
        raise InvalidSpec("algorithms must be a list")
    return Scenario(
        topology=_topology_from_dict(raw["topology"]),
        gmrf=GmrfSpec(sigma2=float(gmrf_raw["sigma2"]),
                      nu=float(gmrf_raw["nu"]),
                      kappa=float(gmrf_raw["kappa"])),
        signals=_signals_from_dict(raw["signals"]),
        parameter=_parameter_from_dict(raw.get("parameter", {})),
        algorithms=tuple(_algorithm_from_dict(a) for a in algorithms),
        n_iters=int(raw.get("n_iters", 1000)),
        n_runs=int(raw.get("n_runs", 1)),
        steady_window=int(raw.get("steady_window", 200)),
        master_seed=int(raw.get("master_seed", 0)),
        allow_unstable=bool(raw.get("allow_unstable", False)),
        track_components=tuple(int(c) for c in raw.get("track_components", [])),
        track_node=int(raw.get("track_node", 0)),
    )


def load_scenario(path):
    """Parse a YAML (or JSON) scenario file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidSpec(f"{path} does not contain a mapping")
    return scenario_from_dict(raw)


def scenario_to_dict(scenario: Scenario):
    """Inverse of scenario_from_dict, for materializing presets to disk."""
    topo = scenario.topology
    if topo.kind == "generated":
        topo_raw = {"kind": "generated", "n_nodes": topo.n_nodes}
        if topo.comm_radius is not None:
            topo_raw["comm_radius"] = topo.comm_radius
        if topo.side != 1.0:
            topo_raw["side"] = topo.side
    else:
        topo_raw = {"kind": "explicit",
                    "positions": [list(p) for p in topo.positions],
                    "comm_edges": [list(e) for e in topo.comm_edges],
                    "dep_edges": [list(e) for e in topo.dep_edges]}
    sig = scenario.signals
    if sig.power_range is not None:
        power = {"low": sig.power_range[0], "high": sig.power_range[1]}
    elif len(sig.power_fixed) == 1:
        power = sig.power_fixed[0]
    else:
        power = list(sig.power_fixed)
    par = scenario.parameter
    par_raw = {"kind": par.kind, "value": par.value}
    if par.theta0 is not None:
        par_raw["theta0"] = list(par.theta0)
    if par.support_size is not None:
        par_raw["support_size"] = par.support_size
    if par.kind == "ar-tracking":
        par_raw.update(ar_coeff=par.ar_coeff, drive_mean=par.drive_mean,
                       drive_var=par.drive_var)
    if par.zero_intervals:
        par_raw["zero_intervals"] = [list(z) for z in par.zero_intervals]
    algs = []
    for a in scenario.algorithms:
        entry = {"kind": a.kind, "name": a.name,
                 "step_size": list(a.step_size)
                 if isinstance(a.step_size, tuple) else a.step_size,
                 "q_rule": a.q_rule, "w_rule": a.w_rule}
        if a.threshold is not None:
            th = {"kind": a.threshold.kind, "gamma": a.threshold.gamma}
            if a.threshold.beta is not None:
                th["beta"] = a.threshold.beta
            if a.threshold.epsilon is not None:
                th["epsilon"] = a.threshold.epsilon
            entry["threshold"] = th
        if a.kind in ("standalone", "atc_agnostic", "cta_agnostic") \
                and a.agnostic_b != "inverse_variance":
            entry["agnostic_b"] = a.agnostic_b
        algs.append(entry)
    out = {
        "master_seed": scenario.master_seed,
        "n_runs": scenario.n_runs,
        "n_iters": scenario.n_iters,
        "steady_window": scenario.steady_window,
        "topology": topo_raw,
        "gmrf": {"sigma2": scenario.gmrf.sigma2, "nu": scenario.gmrf.nu,
                 "kappa": scenario.gmrf.kappa},
        "signals": {"m_dim": sig.m_dim, "regressor_power": power},
        "parameter": par_raw,
        "algorithms": algs,
    }
    if scenario.allow_unstable:
        out["allow_unstable"] = True
    if scenario.track_components:
        out["track_components"] = list(scenario.track_components)
        out["track_node"] = scenario.track_node
    return out


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=False)
