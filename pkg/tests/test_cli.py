import json
import subprocess
import sys

import numpy as np
import pytest

from lpeirl1 import diagnose_document, fileio, read_trace_csv
from lpeirl1.cli import main


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def instance_dir(tmp_path):
    out = tmp_path / "inst"
    assert run("generate", "--out", str(out), "--m", "24", "--n", "48",
               "--K", "3", "--seed", "5") == 0
    return out


# ------------------------------------------------------------------- generate


def test_generate_writes_container_files(instance_dir):
    for name in ("A.bin", "x_true.bin", "y.bin", "instance.json"):
        assert (instance_dir / name).exists()
    A = fileio.load_matrix(instance_dir / "A.bin")
    x_true = fileio.load_vector(instance_dir / "x_true.bin")
    y = fileio.load_vector(instance_dir / "y.bin")
    assert A.shape == (24, 48) and x_true.shape == (48,) and y.shape == (24,)
    meta = fileio.read_json(instance_dir / "instance.json")
    assert meta["m"] == 24 and meta["n"] == 48 and meta["K"] == 3
    assert meta["seed"] == 5
    assert meta["generator"] == "numpy-PCG64"
    assert meta["files"]["A.bin"]["sha256"] == fileio.sha256_file(instance_dir / "A.bin")
    assert meta["files"]["A.bin"]["rows"] == 24
    assert meta["files"]["y.bin"]["cols"] == 1


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("generate", "--out", str(a), "--m", "16", "--n", "32", "--seed", "3") == 0
    assert run("generate", "--out", str(b), "--m", "16", "--n", "32", "--seed", "3") == 0
    for name in ("A.bin", "x_true.bin", "y.bin"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "instance.json").read_text() == (b / "instance.json").read_text()


def test_generate_csv_export(tmp_path):
    out = tmp_path / "inst"
    assert run("generate", "--out", str(out), "--m", "8", "--n", "16", "--K", "2",
               "--seed", "0", "--csv") == 0
    A = fileio.load_matrix(out / "A.bin")
    rows = (out / "A.csv").read_text().strip().splitlines()
    assert len(rows) == 8
    assert float(rows[0].split(",")[0]) == A[0, 0]
    assert (out / "x_true.csv").exists() and (out / "y.csv").exists()


def test_generate_invalid_k_exits_1(tmp_path, capsys):
    code = run("generate", "--out", str(tmp_path / "x"), "--m", "8", "--n", "16", "--K", "99")
    assert code == 1
    assert "K" in capsys.readouterr().err


def test_generate_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 16, "n": 32, "seed": 5}))
    out = tmp_path / "o1"
    assert run("generate", "--config", str(cfg), "--out", str(out)) == 0
    assert fileio.read_json(out / "instance.json")["seed"] == 5
    out2 = tmp_path / "o2"
    assert run("generate", "--config", str(cfg), "--out", str(out2), "--seed", "9") == 0
    assert fileio.read_json(out2 / "instance.json")["seed"] == 9


def test_generate_unknown_config_field_exits_1(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 16, "n": 32, "spikes": 3}))
    assert run("generate", "--config", str(cfg), "--out", str(tmp_path / "o")) == 1
    err = capsys.readouterr().err
    assert "spikes" in err and "allowed" in err


# ---------------------------------------------------------------------- solve


def test_solve_writes_trace_and_summary(instance_dir, tmp_path):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out),
               "--seed", "1") == 0
    summary = fileio.read_json(out / "summary.json")
    trace = read_trace_csv(out / "trace.csv")
    assert summary["solver"] == "eirl1"
    assert summary["converged"] is True
    assert summary["termination_reason"] == "opttol_met"
    assert len(trace) == summary["iterations"] + 1
    assert summary["final_support_size"] == trace[-1].support_size
    assert summary["final_mse"] == trace[-1].mse
    assert summary["diagnostics"]["psi_violations"] == 0
    assert summary["diagnostics"]["psi_ok"] is True
    assert summary["m"] == 24 and summary["n"] == 48
    assert summary["lambda"] == 0.05 and summary["alpha"] == "0.9"


def test_solve_zeros_x0_is_seed_free(instance_dir, tmp_path):
    o1, o2 = tmp_path / "r1", tmp_path / "r2"
    assert run("solve", "--instance", str(instance_dir), "--out", str(o1),
               "--x0", "zeros", "--seed", "1") == 0
    assert run("solve", "--instance", str(instance_dir), "--out", str(o2),
               "--x0", "zeros", "--seed", "2") == 0
    assert (o1 / "trace.csv").read_bytes() == (o2 / "trace.csv").read_bytes()
    first = read_trace_csv(o1 / "trace.csv")[0]
    assert first.support_size == 0


def test_solve_gaussian_x0_depends_on_seed(instance_dir, tmp_path):
    o1, o2 = tmp_path / "r1", tmp_path / "r2"
    assert run("solve", "--instance", str(instance_dir), "--out", str(o1), "--seed", "1") == 0
    assert run("solve", "--instance", str(instance_dir), "--out", str(o2), "--seed", "2") == 0
    a = read_trace_csv(o1 / "trace.csv")[0]
    b = read_trace_csv(o2 / "trace.csv")[0]
    assert a.F_eps != b.F_eps


def test_solve_each_solver(instance_dir, tmp_path):
    for solver in ("eirl1", "irl1", "irl2", "ijt"):
        out = tmp_path / solver
        assert run("solve", "--instance", str(instance_dir), "--out", str(out),
                   "--solver", solver, "--p", "1/2") == 0
        assert fileio.read_json(out / "summary.json")["solver"] == solver


def test_solve_fraction_p_flag(instance_dir, tmp_path):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out),
               "--solver", "ijt", "--p", "2/3") == 0
    assert fileio.read_json(out / "summary.json")["p"] == pytest.approx(2 / 3)
    assert run("solve", "--instance", str(instance_dir), "--out", str(out),
               "--p", "third") == 1


def test_solve_missing_instance_file_exits_1(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = run("solve", "--instance", str(empty), "--out", str(tmp_path / "o"))
    assert code == 1
    assert "A.bin" in capsys.readouterr().err


def test_solve_without_x_true_omits_mse(instance_dir, tmp_path):
    (instance_dir / "x_true.bin").unlink()
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out)) == 0
    summary = fileio.read_json(out / "summary.json")
    assert summary["final_mse"] is None
    assert all(r.mse is None for r in read_trace_csv(out / "trace.csv"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # the overflow is the point
def test_solve_numerical_failure_exits_2(tmp_path):
    inst = tmp_path / "inst"
    inst.mkdir()
    big = 1e100  # keeps the Lipschitz estimate finite but overflows mid-run
    fileio.save_matrix(inst / "A.bin", np.diag([big, big]))
    fileio.save_vector(inst / "y.bin", np.array([big, big]))
    out = tmp_path / "run"
    code = run("solve", "--instance", str(inst), "--out", str(out), "--x0", "zeros")
    assert code == 2
    summary = fileio.read_json(out / "summary.json")
    assert summary["termination_reason"] == "numerical_failure"
    assert summary["converged"] is False
    assert (out / "trace.csv").exists()  # partial trace preserved


def test_solve_config_file_roundtrip(instance_dir, tmp_path):
    cfg = tmp_path / "solve.json"
    cfg.write_text(json.dumps({"solver": "irl1", "lambda": 0.1, "x0": "zeros"}))
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out),
               "--config", str(cfg)) == 0
    summary = fileio.read_json(out / "summary.json")
    assert summary["solver"] == "irl1"
    assert summary["lambda"] == 0.1
    assert summary["x0"] == "zeros"


# ---------------------------------------------------------------------- bench


def bench_config(tmp_path, **extra):
    cfg = {
        "m": 24,
        "n": 48,
        "K": 3,
        "trials": 3,
        "base_seed": 11,
    }
    cfg.update(extra)
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg))
    return path


def test_bench_alpha_sweep_outputs(tmp_path):
    cfg = bench_config(tmp_path, alphas=[0.0, 0.3, 0.5, 0.7, 0.9])
    out = tmp_path / "bench"
    assert run("bench", "--config", str(cfg), "--out", str(out)) == 0
    assert (out / "summaries.csv").exists()
    agg = fileio.read_json(out / "aggregate.json")
    ids = ["eirl1_a0", "eirl1_a0.3", "eirl1_a0.5", "eirl1_a0.7", "eirl1_a0.9"]
    assert sorted(agg["solvers"]) == sorted(ids)
    for sid in ids:
        curve = (out / f"mse_curve_{sid}.csv").read_text().splitlines()
        assert curve[0] == "k,mean_mse,median_mse"
        assert len(curve) >= 3
    header = (out / "summaries.csv").read_text().splitlines()[0]
    assert header == "seed,solver,iterations,converged,final_mse,final_support_size,invariant_violations"
    assert "wall_time" not in header
    lines = (out / "summaries.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * 5  # trials x alphas
    assert agg["failures"] == {}


def test_bench_rerun_is_byte_identical(tmp_path):
    cfg = bench_config(tmp_path, alphas=[0.0, 0.9])
    o1, o2 = tmp_path / "b1", tmp_path / "b2"
    assert run("bench", "--config", str(cfg), "--out", str(o1)) == 0
    assert run("bench", "--config", str(cfg), "--out", str(o2)) == 0
    for name in ("summaries.csv", "aggregate.json", "mse_curve_eirl1_a0.csv",
                 "mse_curve_eirl1_a0.9.csv"):
        assert (o1 / name).read_bytes() == (o2 / name).read_bytes(), name


def test_bench_explicit_solvers_config(tmp_path):
    cfg = bench_config(
        tmp_path,
        solvers=[
            {"kind": "eirl1", "alpha": "0.9"},
            {"kind": "irl2", "alpha": "0.9"},
            {"kind": "ijt"},
        ],
    )
    out = tmp_path / "bench"
    assert run("bench", "--config", str(cfg), "--out", str(out)) == 0
    agg = fileio.read_json(out / "aggregate.json")
    assert sorted(agg["solvers"]) == ["eirl1_a0.9", "ijt", "irl2_a0.9"]
    for sid, block in agg["solvers"].items():
        assert block["converged_trials"] == 3
        assert len(block["support_size_quartiles"]) == 5


def test_bench_defaults_without_config(tmp_path):
    out = tmp_path / "bench"
    assert run("bench", "--out", str(out), "--m", "16", "--n", "32", "--K", "2",
               "--trials", "2") == 0
    agg = fileio.read_json(out / "aggregate.json")
    assert list(agg["solvers"]) == ["eirl1_a0.9"]
    assert agg["trials"] == 2 and agg["generator"] == "numpy-PCG64"


def test_bench_bad_solver_entry_exits_1(tmp_path, capsys):
    cfg = bench_config(tmp_path, solvers=[{"kind": "eirl1", "momentum": 0.9}])
    assert run("bench", "--config", str(cfg), "--out", str(tmp_path / "b")) == 1
    assert "momentum" in capsys.readouterr().err


# ------------------------------------------------------------------- diagnose


def test_diagnose_matches_in_process_document(instance_dir, tmp_path):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out)) == 0
    doc_path = tmp_path / "doc.json"
    assert run("diagnose", "--trace", str(out / "trace.csv"), "--beta", "1.0",
               "--alpha-bar", "0.9", "--out", str(doc_path)) == 0
    records = read_trace_csv(out / "trace.csv")
    want = diagnose_document(records, beta=1.0, alpha_bar=0.9)
    assert json.loads(doc_path.read_text()) == json.loads(json.dumps(want))


def test_diagnose_prints_json_without_out(instance_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out)) == 0
    capsys.readouterr()  # drop the solve status line
    assert run("diagnose", "--trace", str(out / "trace.csv")) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"psi_decrease", "stabilization", "tail_sums", "rate"}


def test_diagnose_with_reference_vector(instance_dir, tmp_path):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out)) == 0
    doc_path = tmp_path / "doc.json"
    assert run("diagnose", "--trace", str(out / "trace.csv"),
               "--x-ref", str(instance_dir / "x_true.bin"), "--out", str(doc_path)) == 0
    doc = json.loads(doc_path.read_text())
    assert doc["rate"]["points"] >= 0


def test_diagnose_corrupt_trace_reports_row(instance_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert run("solve", "--instance", str(instance_dir), "--out", str(out)) == 0
    path = out / "trace.csv"
    lines = path.read_text().splitlines(keepends=True)
    lines[2] = "0,bogus" + lines[2]
    path.write_text("".join(lines))
    assert run("diagnose", "--trace", str(path)) == 1
    assert "row 3" in capsys.readouterr().err


def test_diagnose_missing_trace_exits_1(tmp_path, capsys):
    assert run("diagnose", "--trace", str(tmp_path / "nope.csv")) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_diagnose_single_row_trace_exits_1(tmp_path, capsys):
    from lpeirl1.trace import TRACE_COLUMNS

    path = tmp_path / "t.csv"
    path.write_text(",".join(TRACE_COLUMNS) + "\n0,1.0,1.0,0.0,0.0,2,1.0,,,1,2,,\n")
    assert run("diagnose", "--trace", str(path)) == 1
    assert "at least 2" in capsys.readouterr().err


# ----------------------------------------------------------------- exit codes


def test_help_exits_zero(capsys):
    assert run("--help") == 0
    assert "generate" in capsys.readouterr().out


def test_unknown_flag_exits_one(capsys):
    assert run("solve", "--instance", "x", "--out", "y", "--wat") == 1


def test_missing_command_exits_one(capsys):
    assert run() == 1


def test_unknown_solver_choice_exits_one(tmp_path, capsys):
    assert run("solve", "--instance", str(tmp_path), "--out", str(tmp_path / "o"),
               "--solver", "newton") == 1


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "lpeirl1.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "diagnose" in proc.stdout
