import json

import numpy as np
import pytest

from anisolab import integrand as ig, surface as sf
from anisolab.cli import main
from anisolab.harness import (
    REQUIRED_CHECKS,
    ExperimentConfig,
    accept_candidate,
    parse_surface,
    selftest,
    verify_bounds,
)

C1 = ig.constant(1.0)
TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def catenoid_report():
    config = ExperimentConfig(
        surface="catenoid:3",
        grid=96,
        domains=[[0, TWO_PI, -1, 1], [0, TWO_PI, -2, 2], [0, TWO_PI, -2.8, 2.8]],
    )
    return verify_bounds(config)


class TestAcceptCandidate:
    def test_catenoid_accepted(self):
        patch = sf.fixture("catenoid", grid=(96, 96), v_extent=2.0)
        out = accept_candidate(patch, C1)
        assert out["accepted"]
        assert out["sup_h_gamma"] < 1e-9

    def test_sphere_rejected(self):
        out = accept_candidate(sf.fixture("sphere", grid=(64, 64)), C1)
        assert not out["accepted"]
        assert out["relative"] == pytest.approx(2.0, rel=1e-6)

    def test_identity_shear_with_round_quadratic_weight(self):
        patch = sf.fixture("sheared_catenoid", grid=(64, 64), shear=np.eye(3), v_extent=2.0)
        out = accept_candidate(patch, ig.ellipsoid(1, 1, 1))
        assert out["accepted"]

    def test_matched_shear_accepted_mismatched_rejected(self):
        shear = np.diag([1.0, 1.0, 2.0])
        patch = sf.fixture("sheared_catenoid", grid=(64, 64), shear=shear, v_extent=2.0)
        assert accept_candidate(patch, ig.ellipsoid(1, 1, 2))["accepted"]
        assert not accept_candidate(patch, ig.ellipsoid(2, 1, 1))["accepted"]


class TestVerifyBounds:
    def test_catenoid_all_checks_pass(self, catenoid_report):
        rep = catenoid_report
        assert rep["all_passed"]
        assert rep["spectral"]["stabilized_index"] == 1
        pg = rep["gauss"]["pseudographs"]["0,0,1"]
        assert pg["lower_bound"] == 1
        assert rep["comparison_counts"][-1]["neg_Lgamma"] >= 1

    def test_check_registry_covered(self, catenoid_report):
        names = {c["name"] for c in catenoid_report["checks"]}
        assert set(REQUIRED_CHECKS) <= names

    def test_every_check_carries_tolerance(self, catenoid_report):
        for c in catenoid_report["checks"]:
            assert "tolerance" in c and "name" in c and "note" in c

    def test_enneper_passes(self):
        rep = verify_bounds(ExperimentConfig(surface="enneper:1.3", grid=96))
        assert rep["all_passed"]
        assert rep["spectral"]["stabilized_index"] == 1

    def test_plane_diagnostic_no_failures(self):
        rep = verify_bounds(ExperimentConfig(surface="plane", grid=48))
        assert rep["accepted"]
        assert rep["spectral"]["stabilized_index"] == 0
        assert rep["all_passed"]
        skipped = {c["name"] for c in rep["checks"] if c["passed"] is None}
        assert "low_genus_instability" in skipped  # planar case is excluded

    def test_sheared_candidate_passes_via_gate_only(self):
        rep = verify_bounds(
            ExperimentConfig(
                surface="sheared_catenoid:1,0,0,0,1,0,0,0,2;2",
                integrand="ellipsoid:1,1,2",
                grid=96,
            )
        )
        assert rep["accepted"]
        assert rep["all_passed"]
        assert rep["spectral"]["stabilized_index"] == 1

    def test_determinism_byte_identical(self):
        config = ExperimentConfig(surface="catenoid:2", grid=48)
        a = json.dumps(verify_bounds(config))
        b = json.dumps(verify_bounds(config))
        assert a == b

    def test_selftest_flips_checks(self):
        result = selftest(grid=48)
        assert result["ok"]
        assert result["honest_all_passed"]
        assert len(result["corruption_flipped_checks"]) >= 1


class TestConfig:
    def test_round_trip(self):
        config = ExperimentConfig(
            surface="enneper:1.3",
            integrand="sh:2,0,0.05",
            grid=64,
            domains=[[0, 1, 0, 1]],
            genus=0,
            seed=7,
        )
        assert ExperimentConfig.from_json(config.to_json()) == config

    def test_parse_surface_grammar(self):
        assert parse_surface("plane", 16).name == "plane"
        assert parse_surface("plane:2,3", 16).domain == (0.0, 2.0, 0.0, 3.0)
        assert parse_surface("catenoid:1.5", 16).domain[3] == 1.5
        assert parse_surface("enneper:1.2", 16).domain == (-1.2, 1.2, -1.2, 1.2)
        p = parse_surface("sheared_catenoid:1,0,0,0,1,0,0,0,2;1.5", 16)
        assert p.name == "sheared_catenoid"
        with pytest.raises(ValueError):
            parse_surface("torus", 16)


class TestCli:
    def test_wulff_writes_obj(self, tmp_path):
        out = tmp_path / "w.obj"
        assert main(["wulff", "--integrand", "const:1", "--refine", "2", "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("v ")
        assert " f " not in text.splitlines()[0]

    def test_solve_graph_then_spectrum_roundtrip(self, tmp_path):
        sol = tmp_path / "sol.json"
        rc = main(
            [
                "solve-graph", "--integrand", "const:1",
                "--domain", "1.2,2,-0.4,0.4", "--grid", "49",
                "--bc", "catenoid", "--out", str(sol),
            ]
        )
        assert rc == 0
        payload = json.loads(sol.read_text())
        assert payload["converged"]
        assert len(payload["u"]) == 49 * 49
        spec_out = tmp_path / "spec.json"
        rc = main(
            ["spectrum", "--surface", str(sol), "--integrand", "const:1",
             "--out", str(spec_out)]
        )
        assert rc == 0
        rep = json.loads(spec_out.read_text())
        assert rep["stabilized_index"] == 0  # small stable graph piece

    def test_curvature_export_with_sidecar(self, tmp_path):
        out = tmp_path / "c.obj"
        rc = main(
            ["curvature", "--surface", "catenoid:1.5", "--integrand", "const:1",
             "--grid", "32", "--out", str(out)]
        )
        assert rc == 0
        sidecar = json.loads((tmp_path / "c.obj.json").read_text())
        assert set(sidecar) == {"h_gamma", "k_sigma", "k_gamma"}
        assert len(sidecar["k_sigma"]) == 32 * 32

    def test_gauss_command(self, tmp_path):
        out = tmp_path / "g.json"
        rc = main(
            ["gauss", "--surface", "catenoid:2", "--integrand", "const:1",
             "--grid", "64", "--axis", "0,0,1", "--out", str(out)]
        )
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["pseudograph"]["N"] == 2
        assert payload["pseudograph"]["lower_bound"] == 1

    def test_bounds_exit_codes(self, tmp_path):
        out = tmp_path / "v.json"
        rc = main(
            ["bounds", "--surface", "catenoid:2", "--integrand", "const:1",
             "--grid", "48", "--out", str(out)]
        )
        assert rc == 0
        assert json.loads(out.read_text())["all_passed"]

    def test_bounds_config_file(self, tmp_path):
        cfg = ExperimentConfig(surface="plane", grid=32)
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        assert main(["bounds", "--config", str(path), "--out", str(tmp_path / "r.json")]) == 0

    def test_selftest_command(self):
        assert main(["selftest", "--grid", "48"]) == 0

    def test_boundary_data_from_file(self, tmp_path):
        bc = tmp_path / "bc.json"
        bc.write_text(json.dumps({"bc": "linear:0.3,-0.7,0.2"}))
        sol = tmp_path / "sol.json"
        rc = main(
            ["solve-graph", "--integrand", "ellipsoid:1,1,2",
             "--domain", "0,1,0,1", "--grid", "33", "--bc", str(bc),
             "--out", str(sol)]
        )
        assert rc == 0
        assert json.loads(sol.read_text())["iterations"] == 1

    def test_integrand_error_is_reported(self, tmp_path):
        rc = main(
            ["wulff", "--integrand", "sh:2,0,9", "--out", str(tmp_path / "x.obj")]
        )
        assert rc == 2
