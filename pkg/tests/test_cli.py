import csv
import json

import pytest

from momentlab import cli
from momentlab.parallel import JOBS_ENV, resolve_jobs


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


class TestCommands:
    def test_critical_boolean_preset(self, capsys, tmp_path):
        code, out, _ = run(capsys, "critical", "--model", "boolean", "--preset", "paper-2.833", "--out", str(tmp_path))
        res = out["result"]
        assert code == 0 and 2.823 <= res["c_star"] <= 2.843
        assert res["beta_search"]["is_local_optimum"]
        saved = json.loads((tmp_path / "critical.json").read_text())
        assert saved["c_star"] == res["c_star"] and saved["beta_star"]["TTT"] == 0.0929
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["preset"] == "paper-2.833" and manifest["config"]["beta_ttt"] == 0.0929

    def test_first_moment_preset(self, capsys, tmp_path):
        code, out, _ = run(capsys, "critical", "--preset", "paper-3.783", "--out", str(tmp_path))
        assert code == 0 and out["result"]["c_star"] == pytest.approx(3.783, abs=0.01)

    def test_rate_at_independence(self, capsys, tmp_path):
        code, out, _ = run(capsys, "rate", "--c", "2", "--beta-ttt", "0.1", "--out", str(tmp_path))
        assert code == 0 and abs(out["result"]["gap"]) < 1e-12

    def test_rate_beta_sum_schema_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "rate", "--c", "2", "--beta", "[0.5, 0.6, 0, 0, 0, 0, 0]", "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA
        assert err["kind"] == "schema" and "sum to 1" in err["constraint"] and err["keys"] == ["beta"]

    def test_maximize(self, capsys, tmp_path):
        code, out, _ = run(capsys, "maximize", "--c", "3.2", "--beta-ttt", "0.0929", "--grid", "100",
                           "--out", str(tmp_path))
        assert code == 0 and out["result"]["gap"] > 0 and out["result"]["x"]["mu"] != 0.25

    def test_lab_hamming(self, capsys, tmp_path):
        code, out, _ = run(capsys, "lab", "--experiment", "hamming", "--model", "nae", "--n", "24", "--c", "1.5",
                           "--seeds", "1..50", "--out", str(tmp_path))
        assert code == 0
        rows = list(csv.DictReader(open(tmp_path / "hamming.csv")))
        assert sum(int(r["count"]) for r in rows) == out["result"]["pairs"] > 0
        manifest = json.loads((tmp_path / "hamming.manifest.json").read_text())
        assert manifest["parameters"]["seeds"] == list(range(1, 51))

    def test_lab_reproducible(self, capsys, tmp_path):
        for name in ("a", "b"):
            run(capsys, "lab", "--experiment", "surface", "--model", "sat", "--n", "16", "--c", "3.0",
                "--seeds", "0..5", "--jobs", "1" if name == "a" else "2", "--out", str(tmp_path / name))
        for f in ("surface.csv", "surface.manifest.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_scan_omega(self, capsys, tmp_path):
        code, out, _ = run(capsys, "scan", "--kind", "omega", "--omegas", "[0.5, 1.0, 2.0]", "--out", str(tmp_path))
        assert code == 0 and out["result"]["nonpositive_at"] == [1.0]
        assert (tmp_path / "omega_scan.csv").read_text().startswith("omega,gap,loglog_gap")

    def test_scan_delta_rho_small(self, capsys, tmp_path):
        code, out, _ = run(capsys, "scan", "--delta-axis", "[0.4, 0.5, 2]", "--rho-axis", "[0.3, 0.7, 2]",
                           "--grid", "60", "--out", str(tmp_path))
        assert code == 0 and out["result"]["nonpositive_deltas"] == [0.5]

    def test_table1_single(self, capsys, tmp_path):
        code, out, _ = run(capsys, "table1", "--alphas", "[0.333]", "--out", str(tmp_path))
        assert code == 0 and out["result"]["rows"][0]["c"] == pytest.approx(0.89, abs=0.02)
        header = (tmp_path / "table1.csv").read_text().splitlines()[0]
        assert header == "alpha,c,beta_TFF,beta_TTF,beta_Tss"


class TestErrors:
    def test_unknown_config_keys(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"schema_version": 1, "config": {"c": 1, "zeta": 2, "alpha_beta": 3}}))
        code, _, err = run(capsys, "rate", "--config", str(cfg), "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and err["keys"] == ["alpha_beta", "zeta"]

    def test_schema_version(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"schema_version": 9, "config": {}}))
        code, _, err = run(capsys, "rate", "--config", str(cfg), "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and err["keys"] == ["schema_version"]

    def test_wrong_type(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"schema_version": 1, "config": {"c": "many"}}))
        code, _, err = run(capsys, "rate", "--config", str(cfg), "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and err["keys"] == ["c"]

    def test_preset_for_other_command(self, capsys, tmp_path):
        code, _, err = run(capsys, "scan", "--preset", "paper-2.833", "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and err["keys"] == ["command"]

    def test_unknown_preset(self, capsys, tmp_path):
        code, _, err = run(capsys, "critical", "--preset", "nope", "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and "available" in err["message"]

    def test_domain_error_passes_through(self, capsys, tmp_path):
        code, _, err = run(capsys, "critical", "--c-lo", "3.0", "--c-hi", "3.5", "--out", str(tmp_path))
        assert code == cli.EXIT_DOMAIN and err["error"] == "BracketError"

    def test_missing_required(self, capsys, tmp_path):
        code, _, err = run(capsys, "rate", "--beta-ttt", "0.1", "--out", str(tmp_path))
        assert code == cli.EXIT_SCHEMA and err["keys"] == ["c"]


class TestInterface:
    def test_help_lists_everything(self, capsys):
        with pytest.raises(SystemExit):
            cli.main(["--help"])
        top = capsys.readouterr().out
        for name in cli.SCHEMAS:
            assert name in top
            with pytest.raises(SystemExit):
                cli.main([name, "--help"])
            text = capsys.readouterr().out
            for key in cli.SCHEMAS[name]:
                assert "--" + key.replace("_", "-") in text
            for flag in ("--preset", "--config", "--out"):
                assert flag in text

    def test_flags_match_keys(self):
        parser = cli.build_parser()
        sub = next(a for a in parser._actions if a.dest == "command")
        for name, p in sub.choices.items():
            dests = {a.dest[4:] for a in p._actions if a.dest.startswith("opt_")}
            assert dests == set(cli.SCHEMAS[name])

    @pytest.mark.parametrize("name", cli.preset_names())
    def test_presets_validate(self, name):
        doc = json.loads((cli.resources.files("momentlab.presets") / f"{name}.json").read_text())
        cfg = cli.load_preset(name, doc["command"])
        cli.resolve_config(doc["command"], cfg)

    def test_presets_cover_reproductions(self):
        names = set(cli.preset_names())
        assert {"paper-2.833", "paper-3.783", "paper-2.838", "table1", "omega-scan",
                "scan-balanced-half", "scan-proportional"} <= names

    def test_seed_syntax(self):
        assert cli.parse_seeds("1..3") == [1, 2, 3]
        assert cli.parse_seeds("4,7") == [4, 7]
        assert cli.parse_seeds([5]) == [5]
        with pytest.raises(ValueError):
            cli.parse_seeds("5..1")

    def test_jobs_env(self, monkeypatch):
        monkeypatch.setenv(JOBS_ENV, "3")
        assert resolve_jobs(None) == 3 and resolve_jobs(2) == 2
        monkeypatch.setenv(JOBS_ENV, "x")
        with pytest.raises(ValueError):
            resolve_jobs(None)
