import json
import math

import pytest

from sgmnse import cli


def write_cfg(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def base_cfg(**over):
    cfg = {
        "domain": {"grid": [16, 16, 16]},
        "physics": {"noise_mode": "additive"},
        "forcing": {
            "f_inf": {"random": {"seed": 1, "amplitude": 0.4, "kmax": 2}},
            "g": {"random": {"seed": 2, "amplitude": 0.2, "kmax": 2}},
        },
        "time": {"dt": 4e-3, "t0": 0.0, "t1": 0.2},
        "seeds": {"omega": 77, "ic": 5},
        "ic": {"random": {"seed": 3, "amplitude": 0.3}},
    }
    cfg.update(over)
    return cfg


class TestConfig:
    def test_missing_file(self, tmp_path, capsys):
        rc = cli.main(["simulate", str(tmp_path / "nope.json")])
        assert rc == cli.EXIT_CONFIG

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert cli.main(["simulate", str(p)]) == cli.EXIT_CONFIG

    def test_bad_grid(self, tmp_path):
        path = write_cfg(tmp_path, "c.json",
                         base_cfg(domain={"grid": [15, 16, 16]}))
        assert cli.main(["simulate", path, "--out",
                         str(tmp_path / "o")]) == cli.EXIT_CONFIG

    def test_bad_noise_mode(self, tmp_path):
        path = write_cfg(tmp_path, "c.json",
                         base_cfg(physics={"noise_mode": "sideways"}))
        assert cli.main(["simulate", path, "--out",
                         str(tmp_path / "o")]) == cli.EXIT_CONFIG

    def test_hash_stability(self):
        a = cli.config_hash({"b": 1, "a": [1, 2]})
        b = cli.config_hash({"a": [1, 2], "b": 1})
        assert a == b


class TestSimulate:
    def test_zero_quickstart(self, tmp_path):
        cfg = base_cfg(ic={"zero": True},
                       forcing={"f_inf": {"zero": True}})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert cli.main(["simulate", path, "--out", str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["final_h2"] == 0.0
        assert (out / "ledger.csv").exists()
        assert (out / "final.sgmf").exists()

    def test_byte_identical_reruns(self, tmp_path):
        path = write_cfg(tmp_path, "c.json", base_cfg())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.main(["simulate", path, "--out", str(out1)]) == cli.EXIT_OK
        assert cli.main(["simulate", path, "--out", str(out2)]) == cli.EXIT_OK
        assert (out1 / "ledger.csv").read_bytes() \
            == (out2 / "ledger.csv").read_bytes()
        assert (out1 / "final.sgmf").read_bytes() \
            == (out2 / "final.sgmf").read_bytes()

    def test_meta_embedded(self, tmp_path):
        path = write_cfg(tmp_path, "c.json", base_cfg())
        out = tmp_path / "out"
        cli.main(["simulate", path, "--out", str(out)])
        header = (out / "ledger.csv").read_text().splitlines()[0]
        assert "config_hash" in header and "artifact_version" in header
        summary = json.loads((out / "summary.json").read_text())
        assert summary["meta"]["omega_seed"] == 77

    def test_numerical_abort_exit_3(self, tmp_path):
        cfg = base_cfg(time={"dt": 0.2, "t0": 0.0, "t1": 1.0},
                       ic={"random": {"seed": 3, "amplitude": 6.0,
                                      "norm": "V"}})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "out"
        assert cli.main(["simulate", path, "--out",
                         str(out)]) == cli.EXIT_NUMERICAL
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "numerical-abort"
        assert summary["step"] is not None


class TestAudit:
    def steady_cfg(self):
        # strong single low mode: trajectories ride the active energy balance
        return base_cfg(
            forcing={"f_inf": {"modes": [{"k": [1, 0, 0],
                                          "amp": [0, 0.1, 0]}]}},
            experiment={"audits": ["additive_ei1n"], "trajectories": 2,
                        "length": 6.0})

    def test_empty_audit_list_noop(self, tmp_path):
        cfg = base_cfg(experiment={"audits": []})
        path = write_cfg(tmp_path, "c.json", cfg)
        assert cli.main(["audit", path, "--out",
                         str(tmp_path / "o")]) == cli.EXIT_OK

    def test_field_audits_pass(self, tmp_path):
        cfg = base_cfg(experiment={"audits": ["operator_identities",
                                              "cutoff", "pressure"]})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["audit", path, "--out", str(out)]) == cli.EXIT_OK
        reports = json.loads((out / "audits.json").read_text())["reports"]
        assert all(r["passed"] for r in reports)

    def test_trajectory_audit_passes(self, tmp_path):
        path = write_cfg(tmp_path, "c.json", self.steady_cfg())
        assert cli.main(["audit", path, "--out",
                         str(tmp_path / "o")]) == cli.EXIT_OK

    def test_sabotaged_r4_fails_exit_4(self, tmp_path):
        cfg = self.steady_cfg()
        cfg["experiment"]["constants_override"] = {"r4_scale": 0.01}
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["audit", path, "--out", str(out)]) == cli.EXIT_AUDIT
        rep = json.loads((out / "audits.json").read_text())
        assert rep["status"] == "audit-failure"

    def test_unknown_audit_exit_2(self, tmp_path):
        cfg = base_cfg(experiment={"audits": ["quantum_flux"]})
        path = write_cfg(tmp_path, "c.json", cfg)
        assert cli.main(["audit", path, "--out",
                         str(tmp_path / "o")]) == cli.EXIT_CONFIG


class TestExperiments:
    def test_attractor_smoke(self, tmp_path):
        cfg = base_cfg(experiment={"member_count": 3, "horizons": [0.5, 1.0],
                                   "radius": 0.3})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["attractor", path, "--out", str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["points"] == 3
        assert (out / "gaps.csv").exists()
        assert (out / "cloud-000.sgmf").exists()

    def test_autonomy_flat_for_autonomous_family(self, tmp_path):
        cfg = base_cfg(experiment={"member_count": 3, "horizons": [0.5, 1.0],
                                   "radius": 0.3, "tau_list": [-1.0, -2.0],
                                   "seeds": [5]})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["autonomy", path, "--out", str(out)]) == cli.EXIT_OK
        rows = json.loads((out / "summary.json").read_text())["rows"]
        for _, dist in rows:
            assert dist < 1e-12

    def test_backward_decreasing_errors(self, tmp_path):
        cfg = base_cfg()
        cfg["forcing"]["f_pert"] = {"random": {"seed": 1, "amplitude": 0.4,
                                               "kmax": 2}}
        cfg["forcing"]["envelope"] = {"kind": "exp"}
        cfg["experiment"] = {"T": 0.5, "tau_list": [-1.0, -3.0, -5.0]}
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["backward", path, "--out", str(out)]) == cli.EXIT_OK
        rows = json.loads((out / "summary.json").read_text())["rows"]
        errs = [e for _, e in rows]
        assert errs[2] < errs[1] < errs[0]

    def test_ou_stats(self, tmp_path):
        cfg = base_cfg(experiment={"n_paths": 400, "t_end": 2.0,
                                   "path_dt": 0.05})
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["ou-stats", path, "--out", str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["recursion_residual"] == 0.0
        assert summary["shift_residual"] < 1e-12

    def test_verify_forcing_exp_family(self, tmp_path):
        cfg = base_cfg()
        cfg["forcing"]["f_pert"] = {"random": {"seed": 1, "amplitude": 0.4,
                                               "kmax": 2}}
        cfg["forcing"]["envelope"] = {"kind": "exp"}
        cfg["experiment"] = {"tau": -2.0, "kappa": 0.5,
                             "k_list": [1.2, 1.8]}
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["verify-forcing", path, "--out",
                         str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["assumption_satisfied"]
        assert summary["tails_nonincreasing"]
        assert math.isfinite(summary["uniformness"])

    def test_verify_forcing_const_rejected(self, tmp_path):
        cfg = base_cfg()
        cfg["forcing"]["f_pert"] = {"random": {"seed": 1, "amplitude": 0.4,
                                               "kmax": 2}}
        cfg["forcing"]["envelope"] = {"kind": "const", "param": 0.5}
        cfg["experiment"] = {"tau": -2.0, "kappa": 0.5, "k_list": [1.2]}
        path = write_cfg(tmp_path, "c.json", cfg)
        out = tmp_path / "o"
        assert cli.main(["verify-forcing", path, "--out",
                         str(out)]) == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert not summary["assumption_satisfied"]
        assert summary["assumption_value"] == math.inf
