"""Experiment presets: scales, rate matching, artifact tables."""

import numpy as np
import pytest

from gmrf_diffusion.errors import UnknownPreset
from gmrf_diffusion.presets import (
    PRESET_NAMES,
    build_preset,
    run_preset,
    write_artifacts,
)
from gmrf_diffusion.runner import compile_scenario, theory_report


class TestBuild:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_all_names_build_both_scales(self, name):
        full = build_preset(name)
        desk = build_preset(name, desk=True)
        assert desk.topology.n_nodes <= 10
        assert desk.signals.m_dim <= full.signals.m_dim
        assert desk.n_runs <= 50
        assert desk.n_iters <= full.n_iters

    def test_unknown_name(self):
        with pytest.raises(UnknownPreset):
            build_preset("fig1_banner")

    def test_comparison_preset_is_rate_matched(self):
        # every baseline is bisected onto the ATC-GMRF spectral radius
        compiled = compile_scenario(build_preset("fig2_comparison", desk=True))
        reps = {r.name: r for r in theory_report(compiled)}
        target = reps["ATC-GMRF"].spectral_radius
        assert 0.0 < target < 1.0
        for name, rep in reps.items():
            if name == "ATC-GMRF":
                continue
            assert abs(rep.spectral_radius - target) <= 5e-4, name

    def test_sparse_presets_use_sparse_truth(self):
        for name in ("fig5_sparsity_sweep", "fig6_sparse_comparison"):
            sc = build_preset(name, desk=True)
            assert sc.parameter.kind == "static-sparse"
            assert sc.parameter.support_size < sc.signals.m_dim

    def test_tracking_preset_shape(self):
        sc = build_preset("fig7_tracking", desk=True)
        assert sc.parameter.kind == "ar-tracking"
        assert sc.n_runs == 1
        assert len(sc.track_components) == 2
        assert all(len(z) == 2 for z in sc.parameter.zero_intervals)


EXPECTED_TABLES = {
    "fig2_comparison": {"nodes", "edges", "curves"},
    "fig3_theory": {"nodes", "edges", "per_node"},
    "fig4_gain_sweep": {"nodes", "edges", "gain"},
    "fig5_sparsity_sweep": {"nodes", "edges", "sweep"},
    "fig6_sparse_comparison": {"nodes", "edges", "curves", "comm"},
    "fig7_tracking": {"nodes", "edges", "tracking"},
}


class TestRun:
    @pytest.mark.parametrize("name", sorted(EXPECTED_TABLES))
    def test_artifact_tables(self, name):
        artifacts, scenario = run_preset(name, desk=True, runs=2, iters=120)
        assert set(artifacts) == EXPECTED_TABLES[name]
        for fields, rows in artifacts.values():
            assert rows, name
            assert all(set(r) == set(fields) for r in rows[:3])
        n = scenario.topology.n_nodes
        assert len(artifacts["nodes"][1]) == n

    def test_override_trims_zero_intervals_and_window(self):
        _, scenario = run_preset("fig7_tracking", desk=True, iters=300)
        assert scenario.n_iters == 300
        assert scenario.steady_window <= 150
        assert all(z[0] < 300 for z in scenario.parameter.zero_intervals)

    def test_rerun_rows_identical(self):
        a, _ = run_preset("fig3_theory", desk=True, runs=2, iters=100)
        b, _ = run_preset("fig3_theory", desk=True, runs=2, iters=100)
        assert a.keys() == b.keys()
        for key in a:
            assert a[key][1] == b[key][1], key

    def test_seed_changes_layout(self):
        a, _ = run_preset("fig3_theory", desk=True, runs=2, iters=100)
        b, _ = run_preset("fig3_theory", desk=True, runs=2, iters=100,
                          seed=777)
        ax = [row["x"] for row in a["nodes"][1]]
        bx = [row["x"] for row in b["nodes"][1]]
        assert ax != bx


class TestWrite:
    def test_rewrite_byte_identical(self, tmp_path):
        artifacts, scenario = run_preset("fig7_tracking", desk=True,
                                         iters=200)
        first = write_artifacts(artifacts, scenario, tmp_path / "a")
        second = write_artifacts(artifacts, scenario, tmp_path / "b")
        assert [p.name for p in first] == [p.name for p in second]
        for pa, pb in zip(first, second):
            assert pa.read_bytes() == pb.read_bytes()

    def test_json_format(self, tmp_path):
        artifacts, scenario = run_preset("fig7_tracking", desk=True,
                                         iters=150)
        paths = write_artifacts(artifacts, scenario, tmp_path, fmt="json")
        names = {p.name for p in paths}
        assert "tracking.json" in names
        assert "scenario.yaml" in names
