import csv
import math
import re

import pytest

from egsolve.cli import main
from egsolve.solver import read_trace_csv


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_solve_ok(self, tmp_path, capsys):
        code, out, _ = run(capsys, "solve", "--op", "quadratic", "--x0", "1,1",
                           "--policy", "thm3", "--out", str(tmp_path))
        assert code == 0
        assert "reason=stop_tol" in out and "iters=117" in out
        tr = read_trace_csv(str(tmp_path / "trace.csv"))
        assert tr.iterations_run == 117
        assert tr.min_norm_F_x == pytest.approx(8.255489269774815e-15, rel=1e-12)

    def test_divergence_exits_2_with_partial_trace(self, tmp_path, capsys):
        code, out, _ = run(capsys, "solve", "--op", "cubic1d", "--x0", "2,2",
                           "--policy", "const:10", "--out", str(tmp_path))
        assert code == 2
        assert "diverged" in out
        tr = read_trace_csv(str(tmp_path / "trace.csv"))
        assert tr.reason == "nonfinite"
        assert len(tr.rows) >= 1

    def test_bad_policy_exits_1(self, tmp_path, capsys):
        code, _, err = run(capsys, "solve", "--op", "quadratic", "--x0", "1,1",
                           "--policy", "bogus", "--out", str(tmp_path))
        assert code == 1 and err

    def test_missing_flag_exits_1(self, capsys):
        code, _, err = run(capsys, "solve", "--op", "quadratic")
        assert code == 1 and err

    def test_bad_nu_kind_exits_1(self, capsys):
        code, _, err = run(capsys, "nu", "bogus")
        assert code == 1 and err

    def test_incompatible_policy_exits_1_without_force(self, tmp_path, capsys):
        code, _, err = run(capsys, "solve", "--op", "cubic1d", "--x0", "0.5,0.5",
                           "--policy", "thm3", "--out", str(tmp_path))
        assert code == 1 and err

    def test_verification_failure_exits_3(self, tmp_path, capsys):
        code, out, _ = run(capsys, "verify", "--op", "cubic1d", "--alpha", "1",
                           "--L0", "1", "--L1", "0.1", "--out", str(tmp_path))
        assert code == 3
        assert "FAIL" in out


class TestNu:
    def test_prints_full_precision_root(self, capsys):
        code, out, _ = run(capsys, "nu", "mono")
        assert code == 0
        assert out.strip() == "0.45060051586483274"

    @pytest.mark.parametrize("kind,val", [
        ("strong-mono", 0.36341019228949445),
        ("weak-minty", 0.5671432904097838),
    ])
    def test_other_kinds(self, capsys, kind, val):
        code, out, _ = run(capsys, "nu", kind)
        assert code == 0
        assert float(out.strip()) == pytest.approx(val, abs=1e-15)


class TestX0AndConfig:
    def test_seeded_random_start_is_deterministic(self, tmp_path, capsys):
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            code, _, _ = run(capsys, "solve", "--op", "quadratic", "--x0", "rand:2",
                             "--seed", "7", "--policy", "const:0.2", "--iters", "20",
                             "--tol", "0", "--out", str(d))
            assert code == 0
            outs.append((d / "trace.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_the_start(self, tmp_path, capsys):
        outs = []
        for seed in ("7", "8"):
            d = tmp_path / seed
            run(capsys, "solve", "--op", "quadratic", "--x0", "rand:2",
                "--seed", seed, "--policy", "const:0.2", "--iters", "20",
                "--tol", "0", "--out", str(d))
            outs.append((d / "trace.csv").read_bytes())
        assert outs[0] != outs[1]

    def test_config_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[solve]\nop = quadratic\nx0 = 1,1\npolicy = thm3\n"
                       "iters = 5\ntol = 0\n")
        code, out, _ = run(capsys, "--config", str(cfg), "solve",
                           "--out", str(tmp_path / "o1"))
        assert code == 0
        assert "iters=5" in out

    def test_explicit_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[solve]\nop = quadratic\nx0 = 1,1\npolicy = thm3\n"
                       "iters = 5\ntol = 0\n")
        code, out, _ = run(capsys, "--config", str(cfg), "solve",
                           "--iters", "3", "--out", str(tmp_path / "o2"))
        assert code == 0
        assert "iters=3" in out


class TestSweep:
    def test_grid_csv_with_diverged_cell(self, tmp_path, capsys):
        code, _, _ = run(capsys, "sweep", "--op", "cubic1d", "--x0", "2,2",
                         "--c0", "100,0.1", "--c1", "0", "--iters", "200",
                         "--out", str(tmp_path))
        assert code == 0   # a diverged cell is a data point, not an error
        with open(tmp_path / "sweep.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["c0", "c1", "iters_to_tol", "final_relerr"]
        body = {float(r[0]): r for r in rows[1:]}
        assert set(body) == {100.0, 0.1}
        # step 1/0.1 = 10 blows up on the cubic field from (2,2)
        assert body[0.1][2] == "-1" and body[0.1][3] == "inf"
        assert body[100.0][3] != "inf"

    def test_rejects_non_numeric_grid(self, tmp_path, capsys):
        code, _, err = run(capsys, "sweep", "--op", "cubic1d", "--x0", "1,1",
                           "--c0", "10,abc", "--c1", "0", "--iters", "10",
                           "--out", str(tmp_path))
        assert code == 1 and err


class TestVerify:
    def test_declared_constants_pass(self, tmp_path, capsys):
        code, out, _ = run(capsys, "verify", "--op", "forsaken",
                           "--pairs", "50", "--grid", "41", "--out", str(tmp_path))
        assert code == 0
        assert "FAIL" not in out
        assert (tmp_path / "fit.csv").exists()

    def test_both_routes_reported(self, tmp_path, capsys):
        code, out, _ = run(capsys, "verify", "--op", "quadratic",
                           "--pairs", "50", "--grid", "21", "--out", str(tmp_path))
        assert code == 0
        assert "jacobian" in out and "segment" in out


class TestEstimate:
    def test_from_grid_recovers_affine_constants(self, tmp_path, capsys):
        code, out, _ = run(capsys, "estimate", "--op", "quadratic", "--from-grid",
                           "--out", str(tmp_path))
        assert code == 0
        with open(tmp_path / "fit.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["alpha", "L0", "L1", "max_violation"]
        alpha, L0, L1, _mv = map(float, rows[1])
        assert L0 == pytest.approx(math.sqrt(2.0), abs=1e-6)
        assert L1 <= 1e-9
        assert alpha == 0.25   # constant ||J|| ties every alpha; first grid entry wins
        assert (tmp_path / "scatter.csv").exists()

    def test_from_trace_needs_policy(self, tmp_path, capsys):
        code, _, err = run(capsys, "estimate", "--op", "quadratic",
                           "--out", str(tmp_path))
        assert code == 1 and err


class TestReproduceFig5:
    def test_regression(self, tmp_path, capsys):
        code, out, _ = run(capsys, "reproduce", "fig5", "--out", str(tmp_path))
        assert code == 0
        assert "PASS fig5-all-converge" in out
        assert "PASS fig5-ours-fastest" in out
        assert "ours@47" in out and "egplus@348" in out and "pethick@717" in out
        for name in ("trace_ours.csv", "trace_egplus.csv", "trace_pethick.csv",
                     "comparison.csv", "meta.txt", "fig5.gnuplot"):
            assert (tmp_path / name).exists()

    def test_gnuplot_reads_only_written_files(self, tmp_path, capsys):
        run(capsys, "reproduce", "fig5", "--out", str(tmp_path))
        script = (tmp_path / "fig5.gnuplot").read_text()
        for ref in re.findall(r"'([^']+\.csv)'", script):
            assert (tmp_path / ref).exists(), f"gnuplot reads missing {ref}"

    def test_comparison_has_one_column_pair_per_method(self, tmp_path, capsys):
        run(capsys, "reproduce", "fig5", "--out", str(tmp_path))
        with open(tmp_path / "comparison.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["k", "norm_x_ours", "gamma_ours", "norm_x_egplus",
                          "gamma_egplus", "norm_x_pethick", "gamma_pethick"]
