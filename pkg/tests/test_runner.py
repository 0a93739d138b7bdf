"""Scenario runner: seeding discipline, divergence masking, aggregation."""

import numpy as np
import pytest

from gmrf_diffusion.errors import Diverged, InstabilityError, InvalidSpec
from gmrf_diffusion.gmrf import sample_noise
from gmrf_diffusion.runner import (
    build_network,
    compile_scenario,
    run_scenario,
    steady_state_msd,
    sweep,
    theory_report,
    to_db,
    _initial_truth,
    _parameter_process,
    _with_axis_value,
)
from gmrf_diffusion.scenario import scenario_from_dict
from gmrf_diffusion.seeds import ROLE_DATA, ROLE_PARAM, derive_stream
from gmrf_diffusion.signals import draw_regressors, initial_parameter
from gmrf_diffusion.strategies import acs_step, asc_step, build_combination


def base_raw(**over):
    raw = {
        "topology": {"kind": "generated", "n_nodes": 5},
        "gmrf": {"sigma2": 0.0157, "nu": 0.9, "kappa": 0.1},
        "signals": {"m_dim": 3, "regressor_power": 1.0},
        "parameter": {"kind": "static-sparse", "support_size": 3},
        "algorithms": [{"kind": "atc_gmrf", "step_size": 3e-4}],
        "n_iters": 120,
        "n_runs": 3,
        "steady_window": 30,
        "master_seed": 5,
    }
    raw.update(over)
    return raw


class TestDeterminism:
    def test_bit_identical_repeat(self):
        sc = scenario_from_dict(base_raw())
        a = run_scenario(sc)
        b = run_scenario(sc)
        ra, rb = a.algorithms[0], b.algorithms[0]
        assert np.array_equal(ra.msd_db, rb.msd_db)
        assert np.array_equal(ra.per_node_msd_db, rb.per_node_msd_db)
        assert ra.steady_msd_db == rb.steady_msd_db

    def test_paired_streams_algorithm_independence(self):
        # adding algorithms must not perturb another algorithm's draws
        both = base_raw(algorithms=[
            {"kind": "standalone", "step_size": 3e-4},
            {"kind": "atc_gmrf", "step_size": 3e-4},
            {"kind": "centralized", "step_size": 3e-4},
        ])
        solo = base_raw(algorithms=[{"kind": "atc_gmrf", "step_size": 3e-4}])
        res_both = run_scenario(scenario_from_dict(both))
        res_solo = run_scenario(scenario_from_dict(solo))
        atc_both = next(a for a in res_both.algorithms if a.kind == "atc_gmrf")
        assert np.array_equal(atc_both.msd_db, res_solo.algorithms[0].msd_db)

    def test_worker_pool_matches_serial(self):
        sc = scenario_from_dict(base_raw(n_runs=5))
        serial = run_scenario(sc, jobs=1)
        pooled = run_scenario(sc, jobs=3)
        for a, b in zip(serial.algorithms, pooled.algorithms):
            np.testing.assert_allclose(a.msd_db, b.msd_db, rtol=1e-12)
            np.testing.assert_allclose(a.per_node_msd_db, b.per_node_msd_db,
                                       rtol=1e-12)

    def test_seed_trail_recorded(self):
        res = run_scenario(scenario_from_dict(base_raw(n_runs=1, n_iters=10,
                                                       steady_window=5)))
        assert res.seed_trail["master_seed"] == 5
        assert "topology" in res.seed_trail["scenario_stream"]
        assert res.wall_clock > 0


class TestStepComposition:
    """The batched runner must reproduce the reference one-shot kernels."""

    def replay(self, kind, threshold):
        raw = base_raw(n_runs=1, n_iters=6, steady_window=2)
        raw["algorithms"] = [{"kind": kind, "step_size": 3e-4,
                              "threshold": threshold}]
        sc = scenario_from_dict(raw)
        res = run_scenario(sc)
        compiled = compile_scenario(sc)
        topo, model, stats = compiled.topology, compiled.model, compiled.stats
        alg = compiled.algorithms[0]
        data = derive_stream(sc.master_seed, 1, ROLE_DATA)
        param = derive_stream(sc.master_seed, 1, ROLE_PARAM)
        theta0 = initial_parameter(_parameter_process(sc), stats.m_dim, param)
        step = asc_step if kind == "asc" else acs_step
        thetas = np.zeros((topo.n_nodes, stats.m_dim))
        msd = []
        for _ in range(sc.n_iters):
            U = draw_regressors(stats, data)
            v = sample_noise(model, data)
            x = U @ theta0 + v
            thetas = step(thetas, alg.matrices.s, alg.matrices.p2,
                          alg.spec.threshold, U, x, alg.step_sizes,
                          topo, alg.b_matrix)
            msd.append(((thetas - theta0) ** 2).sum(axis=1).mean())
        np.testing.assert_allclose(res.algorithms[0].msd_db, to_db(np.array(msd)),
                                   rtol=1e-10)

    def test_sparsify_then_combine_matches_reference(self):
        self.replay("asc", {"kind": "l0", "gamma": 1e-4, "beta": 50})

    def test_combine_then_sparsify_matches_reference(self):
        self.replay("acs", {"kind": "soft", "gamma": 1e-3})


class TestDivergenceHandling:
    def unstable_scenario(self, factor, n_iters, n_runs, seed):
        raw = base_raw(n_iters=n_iters, n_runs=n_runs, steady_window=10,
                       master_seed=seed, allow_unstable=True)
        bound = compile_scenario(scenario_from_dict(raw)).algorithms[0].bounds.min()
        raw["algorithms"][0]["step_size"] = float(bound * factor)
        return scenario_from_dict(raw)

    def test_partial_divergence_masked(self):
        # just above the mean bound: blow-up time is draw dependent
        res = run_scenario(self.unstable_scenario(1.2, 400, 12, 11))
        alg = res.algorithms[0]
        assert alg.n_diverged == 3
        assert np.all(np.isfinite(alg.msd_db))
        assert np.all(np.isfinite(alg.per_node_msd_db))

    def test_all_runs_diverged_raises(self):
        with pytest.raises(Diverged):
            run_scenario(self.unstable_scenario(3.0, 200, 4, 11))

    def test_surviving_algorithm_unaffected_by_divergent_peer(self):
        sc = self.unstable_scenario(1.2, 400, 12, 11)
        mu_bad = sc.algorithms[0].step_size
        raw = base_raw(n_iters=400, n_runs=12, steady_window=10,
                       master_seed=11, allow_unstable=True,
                       algorithms=[{"kind": "atc_gmrf", "step_size": 3e-4},
                                   {"kind": "cta_gmrf", "step_size": mu_bad}])
        res = run_scenario(scenario_from_dict(raw))
        good = res.algorithms[0]
        assert good.n_diverged == 0
        ref_raw = base_raw(n_iters=400, n_runs=12, steady_window=10,
                           master_seed=11)
        ref = run_scenario(scenario_from_dict(ref_raw))
        assert np.array_equal(good.msd_db, ref.algorithms[0].msd_db)


class TestStabilityGate:
    def test_step_at_bound_rejected(self):
        raw = base_raw()
        bound = compile_scenario(scenario_from_dict(raw)).algorithms[0].bounds.min()
        raw["algorithms"][0]["step_size"] = float(bound)
        with pytest.raises(InstabilityError):
            compile_scenario(scenario_from_dict(raw))

    def test_allow_unstable_passes_gate(self):
        raw = base_raw(allow_unstable=True)
        bound = compile_scenario(scenario_from_dict(raw)).algorithms[0].bounds.min()
        raw["algorithms"][0]["step_size"] = float(2 * bound)
        compiled = compile_scenario(scenario_from_dict(raw))
        assert compiled.algorithms[0].step_sizes[0] == 2 * bound

    def test_violation_names_algorithm(self):
        raw = base_raw()
        bound = compile_scenario(scenario_from_dict(raw)).algorithms[0].bounds.min()
        raw["algorithms"][0]["step_size"] = float(bound * 1.5)
        with pytest.raises(InstabilityError, match="ATC-GMRF"):
            compile_scenario(scenario_from_dict(raw))

    def test_per_node_steps_validated(self):
        raw = base_raw()
        raw["algorithms"][0]["step_size"] = [3e-4, 3e-4]  # 2 entries, 5 nodes
        with pytest.raises(InvalidSpec):
            compile_scenario(scenario_from_dict(raw))

    def test_centralized_rejects_vector_step(self):
        raw = base_raw(algorithms=[{"kind": "centralized",
                                    "step_size": [1e-4, 1e-4, 1e-4, 1e-4, 1e-4]}])
        with pytest.raises(InvalidSpec):
            compile_scenario(scenario_from_dict(raw))


class TestSteadyStateMsd:
    def test_constant_trajectory(self):
        assert steady_state_msd(np.full(50, 0.01), 10) == pytest.approx(-20.0)

    def test_window_one_is_last_value(self):
        traj = np.linspace(1.0, 0.1, 20)
        assert steady_state_msd(traj, 1) == pytest.approx(10 * np.log10(0.1))

    def test_mean_in_linear_domain(self):
        traj = np.array([1.0, 1e-4])
        expected = 10 * np.log10((1.0 + 1e-4) / 2)
        assert steady_state_msd(traj, 2) == pytest.approx(expected)

    def test_invalid_window(self):
        with pytest.raises(InvalidSpec):
            steady_state_msd(np.ones(10), 0)
        with pytest.raises(InvalidSpec):
            steady_state_msd(np.ones(10), 11)


class TestNetworkBuild:
    def test_power_range_draws_within_bounds(self):
        raw = base_raw(signals={"m_dim": 3, "regressor_power":
                                {"low": 0.5, "high": 2.0}})
        sc = scenario_from_dict(raw)
        _, stats_a = build_network(sc)
        _, stats_b = build_network(sc)
        assert np.all(stats_a.per_node_power >= 0.5)
        assert np.all(stats_a.per_node_power <= 2.0)
        assert np.array_equal(stats_a.per_node_power, stats_b.per_node_power)
        assert np.ptp(stats_a.per_node_power) > 0

    def test_per_node_power_list(self):
        raw = base_raw(signals={"m_dim": 3,
                                "regressor_power": [1.0, 2.0, 3.0, 4.0, 5.0]})
        _, stats = build_network(scenario_from_dict(raw))
        assert np.array_equal(stats.per_node_power, [1, 2, 3, 4, 5])

    def test_power_list_length_mismatch(self):
        raw = base_raw(signals={"m_dim": 3, "regressor_power": [1.0, 2.0]})
        with pytest.raises(InvalidSpec):
            build_network(scenario_from_dict(raw))

    def test_gaussian_truth_when_static_without_vector(self):
        proc = _parameter_process(scenario_from_dict(
            base_raw(parameter={"kind": "static"})))
        a = _initial_truth(proc, 4, np.random.default_rng(0))
        b = _initial_truth(proc, 4, np.random.default_rng(1))
        assert np.any(a != 0) and np.any(a != b)

    def test_explicit_truth_vector_respected(self):
        proc = _parameter_process(scenario_from_dict(
            base_raw(parameter={"kind": "static", "theta0": [1.0, 0.0, 2.0]})))
        got = _initial_truth(proc, 3, np.random.default_rng(0))
        assert np.array_equal(got, [1.0, 0.0, 2.0])


class TestCommunication:
    def test_dense_counts(self):
        raw = base_raw(algorithms=[
            {"kind": "standalone", "step_size": 3e-4},
            {"kind": "atc_gmrf", "step_size": 3e-4},
            {"kind": "centralized", "step_size": 3e-4},
        ])
        sc = scenario_from_dict(raw)
        compiled = compile_scenario(sc)
        topo = compiled.topology
        degrees = sum(len(topo._comm_adj[i]) for i in range(topo.n_nodes))
        res = run_scenario(sc)
        by_kind = {a.kind: a for a in res.algorithms}
        assert np.all(by_kind["standalone"].comm_per_iter == 0)
        assert np.all(by_kind["atc_gmrf"].comm_per_iter == 3 * degrees)
        assert np.all(by_kind["centralized"].comm_per_iter
                      == topo.n_nodes * (3 + 1))

    def test_thresholded_transmission_counts_support(self):
        # a soft threshold this large zeroes every intermediate estimate
        raw = base_raw(algorithms=[
            {"kind": "asc", "step_size": 3e-4,
             "threshold": {"kind": "soft", "gamma": 10.0}},
            {"kind": "atc_gmrf", "step_size": 3e-4},
        ])
        res = run_scenario(scenario_from_dict(raw))
        asc, dense = res.algorithms
        assert np.all(asc.comm_per_iter == 0)
        assert np.all(dense.comm_per_iter > 0)


class TestTracking:
    def test_component_traces(self):
        raw = base_raw(
            parameter={"kind": "ar-tracking", "ar_coeff": 0.98,
                       "drive_mean": 0.01, "drive_var": 0.04,
                       "zero_intervals": [[50, 80, 0]]},
            track_components=[0, 2], track_node=1,
            n_iters=120, n_runs=2, steady_window=30)
        res = run_scenario(scenario_from_dict(raw))
        tr = res.tracking
        assert tr is not None
        assert tr["components"] == [0, 2]
        assert tr["estimates"].shape == (120, 2)
        assert tr["truth"].shape == (120, 2)
        assert tr["algorithm"] == "ATC-GMRF"
        assert np.all(tr["truth"][50:80, 0] == 0.0)
        assert np.all(tr["truth"][90:, 0] != 0.0)
        assert np.all(np.isfinite(tr["estimates"]))

    def test_no_tracking_by_default(self):
        res = run_scenario(scenario_from_dict(base_raw()))
        assert res.tracking is None


class TestTheoryReport:
    def test_covers_linear_kinds_only(self):
        raw = base_raw(algorithms=[
            {"kind": "standalone", "step_size": 3e-4},
            {"kind": "atc_agnostic", "step_size": 3e-4},
            {"kind": "cta_gmrf", "step_size": 3e-4},
            {"kind": "centralized", "step_size": 3e-4},
            {"kind": "acs", "step_size": 3e-4,
             "threshold": {"kind": "l0", "gamma": 1e-4, "beta": 50}},
        ])
        rep = theory_report(compile_scenario(scenario_from_dict(raw)))
        kinds = [t.kind for t in rep]
        assert kinds == ["standalone", "atc_agnostic", "cta_gmrf", "centralized"]
        for t in rep:
            assert 0 < t.spectral_radius < 1
            assert np.isfinite(t.network_msd_db)
            linear = 10 ** (t.per_node_msd_db / 10)
            assert 10 * np.log10(linear.mean()) == pytest.approx(
                t.network_msd_db, abs=1e-9)

    def test_identity_weighting_option(self):
        raw = base_raw(algorithms=[{"kind": "atc_agnostic", "step_size": 3e-6,
                                    "agnostic_b": "identity"}])
        compiled = compile_scenario(scenario_from_dict(raw))
        assert np.array_equal(compiled.algorithms[0].b_matrix,
                              np.eye(compiled.topology.n_nodes))


class TestSweep:
    def test_empty_values_empty_result(self):
        assert sweep(scenario_from_dict(base_raw()), "nu", []) == []

    def test_row_per_value_and_algorithm(self):
        raw = base_raw(algorithms=[{"kind": "atc_gmrf", "step_size": 3e-4},
                                   {"kind": "standalone", "step_size": 3e-4}],
                       n_iters=60, steady_window=20)
        rows = sweep(scenario_from_dict(raw), "nu", [0.3, 0.9])
        assert len(rows) == 4
        assert rows[0]["axis_value"] == 0.3
        assert {r["algorithm"] for r in rows} == {"ATC-GMRF", "LMS"}
        assert all(np.isfinite(r["msd_db"]) for r in rows)

    def test_axis_rewrites(self):
        sc = scenario_from_dict(base_raw(algorithms=[
            {"kind": "asc", "step_size": 3e-4,
             "threshold": {"kind": "soft", "gamma": 1e-3}},
            {"kind": "atc_gmrf", "step_size": 3e-4}]))
        assert _with_axis_value(sc, "nu", 0.5).gmrf.nu == 0.5
        assert _with_axis_value(sc, "kappa", 2.0).gmrf.kappa == 2.0
        swept = _with_axis_value(sc, "gamma", 9e-2)
        assert swept.algorithms[0].threshold.gamma == 9e-2
        assert swept.algorithms[1].threshold is None
        stepped = _with_axis_value(sc, "step_size", 1e-4)
        assert all(a.step_size == 1e-4 for a in stepped.algorithms)
        resized = _with_axis_value(sc, "support_size", 2)
        assert resized.parameter.support_size == 2

    def test_unknown_axis(self):
        with pytest.raises(InvalidSpec):
            _with_axis_value(scenario_from_dict(base_raw()), "sigma", 1.0)

    def test_support_sweep_requires_sparse_truth(self):
        sc = scenario_from_dict(base_raw(parameter={"kind": "static"}))
        with pytest.raises(InvalidSpec):
            _with_axis_value(sc, "support_size", 2)
