"""Scenario execution: seeded Monte Carlo simulation, theory, and sweeps.

Stream discipline: the scenario-level stream (master_seed, run 0, role
"topology") generates the node layout and then the per-node regressor
powers; run r uses streams (master_seed, r + 1, role) with role "data" for
regressors/noise and "param" for the true-parameter process.  All algorithms
inside one run consume the same data draws (paired comparison), so adding or
removing an algorithm never changes another's trajectory.

Communication accounting counts estimate entries transmitted per iteration:
dense diffusion sends M scalars to each neighbor, the sparsify-then-combine
variant only the current support of the thresholded intermediate, stand-alone
sends nothing, and the fusion center collects M+1 scalars (regressor plus
measurement) per node.  Raw-data exchange among dependency neighbors is
identical across the compared diffusion variants and is not counted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .errors import Diverged, InstabilityError, InvalidSpec
from .gmrf import GmrfModel, build_gmrf, sample_noise
from .graph import NetworkTopology, build_topology, random_topology, spatial_neighborhood
from .scenario import GMRF_KINDS, SPARSE_KINDS, AlgorithmSpec, Scenario
from .seeds import ROLE_DATA, ROLE_PARAM, ROLE_TOPOLOGY, derive_stream
from .signals import (
    ParameterProcess,
    RegressorStats,
    draw_regressors,
    initial_parameter,
    observe,
    step_parameter,
)
from .strategies import (
    DIVERGENCE_LIMIT,
    CombinationMatrices,
    adapt,
    build_combination,
    centralized_lms_step,
    combine,
    general_diffusion_step,
    oriented_precision,
)
from .theory import (
    expected_update_matrix,
    noise_moment_matrix,
    spectral_radius,
    step_size_bounds,
    theoretical_msd,
    transition_matrix,
)
from .thresholds import apply_threshold


def to_db(linear):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(linear)


def steady_state_msd(trajectory, window):
    """Mean of the last ``window`` linear MSD values, in dB."""
    trajectory = np.asarray(trajectory, dtype=float)
    if not 1 <= window <= trajectory.shape[-1]:
        raise InvalidSpec(f"window {window} not in [1, {trajectory.shape[-1]}]")
    return float(to_db(trajectory[..., -window:].mean(axis=-1)))


@dataclass(frozen=True)
class CompiledAlgorithm:
    spec: AlgorithmSpec
    b_matrix: np.ndarray
    matrices: CombinationMatrices | None   # None for the fusion-center filter
    step_sizes: np.ndarray
    bounds: np.ndarray
    comm_dense: float
    out_degree: np.ndarray

    @property
    def name(self):
        return self.spec.name

    @property
    def kind(self):
        return self.spec.kind


@dataclass(frozen=True)
class CompiledScenario:
    scenario: Scenario
    topology: NetworkTopology
    model: GmrfModel
    stats: RegressorStats
    algorithms: tuple


@dataclass
class AlgorithmResult:
    name: str
    kind: str
    msd_db: np.ndarray           # (n_iters,) network MSD per iteration
    per_node_msd_db: np.ndarray  # (N,) steady-state per-node MSD
    steady_msd_db: float
    comm_per_iter: np.ndarray    # (n_iters,) entries transmitted
    n_diverged: int


@dataclass
class RunResult:
    scenario: Scenario
    algorithms: list
    tracking: dict | None
    wall_clock: float
    seed_trail: dict
    n_runs: int


def build_network(scenario: Scenario):
    """Topology and per-node regressor powers from the scenario-level stream."""
    rng = derive_stream(scenario.master_seed, 0, ROLE_TOPOLOGY)
    topo_spec = scenario.topology
    if topo_spec.kind == "generated":
        topology = random_topology(topo_spec.n_nodes, rng,
                                   comm_radius=topo_spec.comm_radius,
                                   side=topo_spec.side)
    else:
        topology = build_topology(np.asarray(topo_spec.positions, dtype=float),
                                  topo_spec.comm_edges, topo_spec.dep_edges)
    n = topology.n_nodes
    sig = scenario.signals
    if sig.power_range is not None:
        lo, hi = sig.power_range
        powers = rng.uniform(lo, hi, size=n)
    elif len(sig.power_fixed) == 1:
        powers = np.full(n, sig.power_fixed[0])
    elif len(sig.power_fixed) == n:
        powers = np.asarray(sig.power_fixed, dtype=float)
    else:
        raise InvalidSpec(
            f"regressor_power has {len(sig.power_fixed)} entries for {n} nodes")
    return topology, RegressorStats(sig.m_dim, powers)


def _agnostic_precision(spec: AlgorithmSpec, sigma2, n):
    if spec.agnostic_b == "identity":
        return np.eye(n)
    return np.diag(np.full(n, 1.0 / sigma2))


def _triple(topology, spec: AlgorithmSpec):
    eye = np.eye(topology.n_nodes)
    q = build_combination(topology, spec.q_rule, stochasticity="row")
    w = build_combination(topology, spec.w_rule)
    if spec.kind in ("atc_gmrf", "atc_agnostic", "acs", "asc"):
        return CombinationMatrices(p1=eye, s=q, p2=w)
    if spec.kind in ("cta_gmrf", "cta_agnostic"):
        return CombinationMatrices(p1=w, s=q, p2=eye)
    return CombinationMatrices(p1=eye, s=eye, p2=eye)  # standalone


def compile_scenario(scenario: Scenario) -> CompiledScenario:
    """Resolve streams and matrices; enforce the step-size bounds unless
    the scenario opts out with allow_unstable."""
    topology, stats = build_network(scenario)
    model = build_gmrf(topology, scenario.gmrf.sigma2, scenario.gmrf.nu,
                       scenario.gmrf.kappa)
    n = topology.n_nodes
    if scenario.parameter.kind == "static-sparse" \
            and scenario.parameter.support_size > stats.m_dim:
        raise InvalidSpec(
            f"support_size {scenario.parameter.support_size} > m_dim {stats.m_dim}")
    out_degree = np.array(
        [len(spatial_neighborhood(topology, i)) - 1 for i in range(n)],
        dtype=float)
    compiled = []
    violations = []
    for spec in scenario.algorithms:
        if spec.kind == "centralized":
            if isinstance(spec.step_size, tuple):
                raise InvalidSpec("centralized takes a scalar step_size")
            b = model.precision
            steps = np.array([float(spec.step_size)])
            bound = np.array([2.0 / float(np.diag(b) @ stats.per_node_power)])
            alg = CompiledAlgorithm(spec, b, None, steps, bound,
                                    comm_dense=n * (stats.m_dim + 1),
                                    out_degree=out_degree)
        else:
            b = model.precision if spec.kind in GMRF_KINDS \
                else _agnostic_precision(spec, scenario.gmrf.sigma2, n)
            matrices = _triple(topology, spec)
            if isinstance(spec.step_size, tuple):
                if len(spec.step_size) != n:
                    raise InvalidSpec(
                        f"{spec.name}: {len(spec.step_size)} step sizes for {n} nodes")
                steps = np.asarray(spec.step_size, dtype=float)
            else:
                steps = np.full(n, float(spec.step_size))
            bound = step_size_bounds(topology, b, matrices.s, stats)
            comm = 0.0 if spec.kind == "standalone" \
                else stats.m_dim * out_degree.sum()
            alg = CompiledAlgorithm(spec, b, matrices, steps, bound,
                                    comm_dense=comm, out_degree=out_degree)
        over = alg.step_sizes >= alg.bounds
        if np.any(over):
            violations.append(
                f"{spec.name}: step {alg.step_sizes[over].max():.3e} >= "
                f"bound {alg.bounds[over].min():.3e}")
        compiled.append(alg)
    if violations and not scenario.allow_unstable:
        raise InstabilityError(
            "step sizes at or above the mean-stability bound: "
            + "; ".join(violations))
    return CompiledScenario(scenario, topology, model, stats, tuple(compiled))


def _parameter_process(scenario: Scenario):
    par = scenario.parameter
    return ParameterProcess(
        kind=par.kind,
        theta0=None if par.theta0 is None else np.asarray(par.theta0),
        support_size=par.support_size,
        value=par.value,
        ar_coeff=par.ar_coeff if par.kind == "ar-tracking" else 0.0,
        drive_mean=par.drive_mean,
        drive_var=par.drive_var,
        zero_intervals=par.zero_intervals,
    )


def _initial_truth(process: ParameterProcess, m_dim, rng):
    # static with no explicit vector: standard Gaussian drawn per run
    if process.kind == "static" and process.theta0 is None:
        return rng.standard_normal(m_dim)
    return initial_parameter(process, m_dim, rng)


def _simulate_chunk(compiled: CompiledScenario, run_indices):
    """Simulate a block of runs batched together; returns accumulators
    keyed by algorithm order, plus tracking traces if run 0 is here."""
    scenario = compiled.scenario
    topology, model, stats = compiled.topology, compiled.model, compiled.stats
    n, m, n_iters = topology.n_nodes, stats.m_dim, scenario.n_iters
    window = scenario.steady_window
    n_runs = len(run_indices)
    algs = compiled.algorithms
    process = _parameter_process(scenario)

    data_rngs = [derive_stream(scenario.master_seed, r + 1, ROLE_DATA)
                 for r in run_indices]
    param_rngs = [derive_stream(scenario.master_seed, r + 1, ROLE_PARAM)
                  for r in run_indices]
    theta_true = np.stack([_initial_truth(process, m, prng)
                           for prng in param_rngs])
    tracking_local = 0 in run_indices and bool(scenario.track_components)
    run0 = run_indices.index(0) if tracking_local else -1

    states = []
    precomp = []
    for alg in algs:
        if alg.kind == "centralized":
            states.append(np.zeros((n_runs, m)))
            precomp.append(None)
        else:
            states.append(np.zeros((n_runs, n, m)))
            precomp.append(oriented_precision(topology, alg.b_matrix))

    alive = np.ones((len(algs), n_runs), dtype=bool)
    traj = np.zeros((len(algs), n_runs, n_iters))
    node_acc = np.zeros((len(algs), n_runs, n))
    comm = np.full((len(algs), n_runs, n_iters), 0.0)
    for a, alg in enumerate(algs):
        comm[a, :, :] = alg.comm_dense
    track_est = np.zeros((n_iters, len(scenario.track_components)))
    track_truth = np.zeros_like(track_est)

    dynamic = process.kind == "ar-tracking"
    for k in range(n_iters):
        if dynamic:
            for r in range(n_runs):
                theta_true[r] = step_parameter(process, theta_true[r], k,
                                               param_rngs[r])
        U = np.stack([draw_regressors(stats, rng) for rng in data_rngs])
        v = np.stack([sample_noise(model, rng) for rng in data_rngs])
        x = np.einsum("rnm,rm->rn", U, theta_true) + v

        for a, alg in enumerate(algs):
            with np.errstate(all="ignore"):
                if alg.kind == "centralized":
                    out = centralized_lms_step(states[a], U, x, alg.b_matrix,
                                               alg.step_sizes[0], check=False)
                    err_sq = ((out - theta_true) ** 2).sum(axis=1)
                    node_sq = err_sq[:, None]
                elif alg.kind == "asc":
                    t_full, t_off = precomp[a]
                    psi = adapt(states[a], U, x, alg.step_sizes,
                                alg.matrices.s, t_full, t_off)
                    zeta = apply_threshold(alg.spec.threshold, psi)
                    support = (zeta != 0.0).sum(axis=2)
                    comm[a, :, k] = support @ alg.out_degree
                    out = combine(zeta, alg.matrices.p2)
                else:
                    out = general_diffusion_step(
                        states[a], alg.matrices, U, x, alg.step_sizes,
                        topology, alg.b_matrix, check=False)
                    if alg.kind == "acs":
                        out = apply_threshold(alg.spec.threshold, out)
                if out.ndim == 3:
                    node_sq = ((out - theta_true[:, None, :]) ** 2).sum(axis=2)
                    err_sq = node_sq.mean(axis=1)
                flat = out.reshape(n_runs, -1)
                ok = np.isfinite(flat).all(axis=1)
                ok &= np.abs(np.where(np.isfinite(flat), flat, 0.0)).max(axis=1) \
                    <= DIVERGENCE_LIMIT
            died = alive[a] & ~ok
            if np.any(died):
                alive[a, died] = False
                out[died] = 0.0
            states[a] = out
            traj[a, :, k] = err_sq
            if k >= n_iters - window:
                node_acc[a] += node_sq
            if tracking_local and a == 0:
                probe = out[run0] if out.ndim == 2 \
                    else out[run0, scenario.track_node]
                for c, comp in enumerate(scenario.track_components):
                    track_est[k, c] = probe[comp]
                    track_truth[k, c] = theta_true[run0, comp]

    return {
        "alive": alive,
        "traj_sum": np.einsum("ark,ar->ak", traj, alive.astype(float)),
        "node_sum": np.einsum("arn,ar->an", node_acc, alive.astype(float)),
        "comm_sum": np.einsum("ark,ar->ak", comm, alive.astype(float)),
        "tracking": (track_est, track_truth) if tracking_local else None,
    }


def run_scenario(scenario: Scenario, jobs=1) -> RunResult:
    """Simulate every configured algorithm over n_runs paired Monte Carlo
    runs; aggregate linear MSD across runs, convert to dB last."""
    started = time.perf_counter()
    compiled = compile_scenario(scenario)
    run_indices = list(range(scenario.n_runs))
    jobs = max(1, min(jobs, scenario.n_runs))
    if jobs == 1:
        parts = [_simulate_chunk(compiled, run_indices)]
    else:
        chunks = [list(c) for c in np.array_split(run_indices, jobs) if len(c)]
        parts = Parallel(n_jobs=jobs)(
            delayed(_simulate_chunk)(compiled, chunk) for chunk in chunks)

    n_algs = len(compiled.algorithms)
    alive_counts = np.zeros(n_algs)
    traj_sum = None
    node_sum = None
    comm_sum = None
    tracking = None
    for part in parts:
        alive_counts += part["alive"].sum(axis=1)
        traj_sum = part["traj_sum"] if traj_sum is None \
            else traj_sum + part["traj_sum"]
        node_sum = part["node_sum"] if node_sum is None \
            else node_sum + part["node_sum"]
        comm_sum = part["comm_sum"] if comm_sum is None \
            else comm_sum + part["comm_sum"]
        if part["tracking"] is not None:
            tracking = part["tracking"]

    window = scenario.steady_window
    results = []
    for a, alg in enumerate(compiled.algorithms):
        n_alive = int(alive_counts[a])
        n_div = scenario.n_runs - n_alive
        if n_alive == 0:
            raise Diverged(
                f"{alg.name}: all {scenario.n_runs} runs diverged")
        msd_linear = traj_sum[a] / n_alive
        per_node_linear = node_sum[a] / (n_alive * window)
        results.append(AlgorithmResult(
            name=alg.name,
            kind=alg.kind,
            msd_db=to_db(msd_linear),
            per_node_msd_db=to_db(per_node_linear),
            steady_msd_db=steady_state_msd(msd_linear, window),
            comm_per_iter=comm_sum[a] / n_alive,
            n_diverged=n_div,
        ))

    tracking_out = None
    if tracking is not None:
        est, truth = tracking
        tracking_out = {
            "components": list(scenario.track_components),
            "estimates": est,
            "truth": truth,
            "algorithm": compiled.algorithms[0].name,
            "node": scenario.track_node,
        }
    trail = {
        "master_seed": scenario.master_seed,
        "scenario_stream": "(master_seed, 0, 'topology')",
        "run_streams": "(master_seed, run+1, role) for role in {data, param}",
    }
    return RunResult(scenario=scenario, algorithms=results,
                     tracking=tracking_out,
                     wall_clock=time.perf_counter() - started,
                     seed_trail=trail, n_runs=scenario.n_runs)


@dataclass
class TheoryResult:
    name: str
    kind: str
    per_node_msd_db: np.ndarray
    network_msd_db: float
    spectral_radius: float
    step_bounds: np.ndarray


def theory_report(compiled: CompiledScenario):
    """Steady-state MSD predictions for every algorithm the linear theory
    covers (the thresholding variants are excluded)."""
    topology, model, stats = compiled.topology, compiled.model, compiled.stats
    out = []
    for alg in compiled.algorithms:
        if alg.kind in SPARSE_KINDS:
            continue
        if alg.kind == "centralized":
            c_sum = float(np.diag(alg.b_matrix) @ stats.per_node_power)
            mu = alg.step_sizes[0]
            beta = 1.0 - mu * c_sum
            msd = stats.m_dim * mu ** 2 * c_sum / (1.0 - beta ** 2)
            per_node = np.full(topology.n_nodes, msd)
            rho = abs(beta)
        else:
            b = alg.b_matrix
            c = model.covariance if alg.kind in GMRF_KINDS \
                else np.linalg.inv(b)
            d = expected_update_matrix(topology, b, alg.matrices.s, stats)
            g = noise_moment_matrix(topology, b, c, alg.matrices.s, stats)
            h = transition_matrix(alg.matrices.p1, alg.matrices.p2, d,
                                  alg.step_sizes)
            per_node = theoretical_msd(h, g, alg.matrices.p2, alg.step_sizes,
                                       target="per_node")
            msd = per_node.mean()
            rho = spectral_radius(h)
        out.append(TheoryResult(
            name=alg.name, kind=alg.kind,
            per_node_msd_db=to_db(per_node),
            network_msd_db=float(to_db(msd)),
            spectral_radius=rho,
            step_bounds=alg.bounds,
        ))
    return out


def _with_axis_value(scenario: Scenario, axis, value):
    if axis == "nu":
        return replace(scenario, gmrf=replace(scenario.gmrf, nu=float(value)))
    if axis == "kappa":
        return replace(scenario, gmrf=replace(scenario.gmrf, kappa=float(value)))
    if axis == "support_size":
        if scenario.parameter.kind != "static-sparse":
            raise InvalidSpec("support_size sweep needs a static-sparse parameter")
        return replace(scenario, parameter=replace(
            scenario.parameter, support_size=int(value)))
    if axis == "gamma":
        algs = tuple(
            replace(a, threshold=replace(a.threshold, gamma=float(value)))
            if a.threshold is not None else a
            for a in scenario.algorithms)
        return replace(scenario, algorithms=algs)
    if axis == "step_size":
        algs = tuple(replace(a, step_size=float(value))
                     for a in scenario.algorithms)
        return replace(scenario, algorithms=algs)
    raise InvalidSpec(f"unknown sweep axis {axis!r}")


SWEEP_AXES = ("nu", "kappa", "support_size", "gamma", "step_size")


def sweep(scenario: Scenario, axis, values, jobs=1):
    """One steady-state record per (value, algorithm); the master seed is
    shared across values so the comparisons are paired."""
    rows = []
    for value in values:
        result = run_scenario(_with_axis_value(scenario, axis, value), jobs=jobs)
        for alg in result.algorithms:
            rows.append({"axis_value": float(value), "algorithm": alg.name,
                         "msd_db": alg.steady_msd_db})
    return rows
