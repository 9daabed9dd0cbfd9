import json

import numpy as np
import pytest

from skmtl.cli import EXIT_DATA, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, main
from skmtl.io import load_json, read_matrix_csv


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def run_synth(tmp_path, name="inst", **overrides):
    cfg = {"T": 5, "support_ratio": 0.4, "d": 20, "n_train": 20, "n_test": 25, "seed": 7}
    cfg.update(overrides)
    cfg_path = write_config(tmp_path / f"{name}.json", cfg)
    out = tmp_path / name
    assert main(["synth", "--config", cfg_path, "--out", str(out)]) == EXIT_OK
    return out


def parse_dot(text):
    """Minimal strict DOT parser: returns (node ids, edges with weights)."""
    assert text.startswith("graph ")
    body = text[text.index("{") + 1 : text.rindex("}")]
    nodes, edges = set(), []
    for ln in body.strip().splitlines():
        ln = ln.strip()
        assert ln.endswith(";"), ln
        stmt = ln[:-1]
        if " -- " in stmt:
            left, rest = stmt.split(" -- ")
            right, attr = rest.split(" [weight=")
            assert attr.endswith("]")
            edges.append((left, right, float(attr[:-1])))
        else:
            name, attr = stmt.split(" [label=")
            assert attr.endswith('"]')
            nodes.add(name)
    for left, right, w in edges:
        assert left in nodes and right in nodes and w >= 0
    return nodes, edges


def test_synth_writes_expected_files(tmp_path):
    out = run_synth(tmp_path)
    manifest = load_json(out / "manifest.json")
    assert manifest["format"] == "skmtl-v1"
    for key, fname in manifest["files"].items():
        assert (out / fname).exists(), key
    n_rows = len((out / "train.csv").read_text().splitlines()) - 1
    assert [n_rows, 25] == [manifest["config"]["n_train"], manifest["config"]["n_test"]]
    a = read_matrix_csv(out / "A_true.csv")
    assert a.shape == (5, 5)


def test_synth_byte_identical_reruns(tmp_path):
    out1 = run_synth(tmp_path, name="a")
    out2 = run_synth(tmp_path, name="b")
    for fname in ("train.csv", "test.csv", "A_true.csv", "A_corrupted.csv"):
        assert (out1 / fname).read_bytes() == (out2 / fname).read_bytes()


def test_synth_support_count(tmp_path):
    out = run_synth(tmp_path, name="s", T=10, support_ratio=0.5, d=30)
    a = read_matrix_csv(out / "A_true.csv")
    assert int(np.count_nonzero(a)) == 50


def test_synth_seed_flag_overrides_config(tmp_path):
    out1 = run_synth(tmp_path, name="c1")
    cfg_path = write_config(
        tmp_path / "c2.json",
        {"T": 5, "support_ratio": 0.4, "d": 20, "n_train": 20, "n_test": 25, "seed": 7},
    )
    out2 = tmp_path / "c2"
    assert main(["synth", "--config", cfg_path, "--out", str(out2), "--seed", "8"]) == EXIT_OK
    assert (out1 / "train.csv").read_bytes() != (out2 / "train.csv").read_bytes()
    assert load_json(out2 / "manifest.json")["seed"] == 8


def fit_config(tmp_path, inst, **hp_overrides):
    hp = {"lambda": 0.01, "mu": 0.5, "epsilon": 0.1}
    hp.update(hp_overrides)
    return write_config(
        tmp_path / "fit.json",
        {"train": str(inst / "train.csv"), "kernel": {"kind": "linear"}, "hyperparams": hp},
    )


def test_fit_stl_identity_structure(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    out = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(out), "--mode", "stl"]) == EXIT_OK
    model = load_json(out / "model.json")
    assert np.array_equal(np.asarray(model["A"]), np.eye(5))
    report = load_json(out / "report.json")
    assert report["status"] == "converged"


def test_fit_reruns_identical_traces(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    r1, r2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["fit", "--config", cfg, "--out", str(r1)]) == EXIT_OK
    assert main(["fit", "--config", cfg, "--out", str(r2)]) == EXIT_OK
    t1 = load_json(r1 / "report.json")["objective_trace"]
    t2 = load_json(r2 / "report.json")["objective_trace"]
    assert t1 == t2
    assert (r1 / "model.json").read_bytes() == (r2 / "model.json").read_bytes()


def test_fit_trace_nonincreasing(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    out = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(out)]) == EXIT_OK
    trace = load_json(out / "report.json")["objective_trace"]
    slack = 1e-6 * (1 + abs(trace[0]))
    assert all(b <= a + slack for a, b in zip(trace, trace[1:]))


def test_fit_nonconverged_still_exit_zero(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst, max_outer=1, outer_tol=1e-300)
    out = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert load_json(out / "report.json")["status"] == "max_iterations"


def test_fit_fixed_mode_from_csv(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    out = tmp_path / "run"
    fixed = f"fixed:{inst / 'A_corrupted.csv'}"
    assert main(["fit", "--config", cfg, "--out", str(out), "--mode", fixed]) == EXIT_OK
    model = load_json(out / "model.json")
    assert np.asarray(model["A"]).shape == (5, 5)


def test_fit_malformed_csv_is_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,y0\n1.0,2.0\n3.0\n")
    cfg = write_config(
        tmp_path / "fit.json",
        {"train": str(bad), "kernel": {"kind": "linear"},
         "hyperparams": {"lambda": 0.1}},
    )
    assert main(["fit", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_DATA


def run_fit_eval(tmp_path, synth_overrides=None, hp_overrides=None, eval_extra=None):
    inst = run_synth(tmp_path, **(synth_overrides or {}))
    cfg = fit_config(tmp_path, inst, **(hp_overrides or {}))
    run = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(run)]) == EXIT_OK
    eval_cfg = {"model": str(run / "model.json"), "test": str(inst / "test.csv")}
    eval_cfg.update(eval_extra or {})
    ecfg = write_config(tmp_path / "eval.json", eval_cfg)
    assert main(["eval", "--config", ecfg, "--out", str(run)]) == EXIT_OK
    return inst, run


def test_eval_perfect_model_round_trip(tmp_path):
    # noiseless targets + tiny ridge: predictions nearly interpolate
    _, run = run_fit_eval(
        tmp_path,
        synth_overrides={"noise_var": 0.0, "n_train": 40, "d": 15},
        hp_overrides={"lambda": 1e-8},
    )
    metrics = load_json(run / "metrics.json")
    assert metrics["nmse"] < 0.05


def test_eval_without_a_true_lacks_support_key(tmp_path):
    _, run = run_fit_eval(tmp_path)
    metrics = load_json(run / "metrics.json")
    assert "support_recovery" not in metrics
    assert "nmse" in metrics


def test_eval_with_a_true_reports_support(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    run = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(run)]) == EXIT_OK
    ecfg = write_config(
        tmp_path / "eval.json",
        {"model": str(run / "model.json"), "test": str(inst / "test.csv"),
         "A_true": str(inst / "A_true.csv")},
    )
    assert main(["eval", "--config", ecfg, "--out", str(run)]) == EXIT_OK
    rec = load_json(run / "metrics.json")["support_recovery"]
    assert set(rec) == {"precision", "recall", "f1", "threshold"}
    assert 0.0 <= rec["f1"] <= 1.0


def test_eval_structure_dot_parses(tmp_path):
    _, run = run_fit_eval(tmp_path)
    nodes, edges = parse_dot((run / "structure.dot").read_text())
    assert len(nodes) == 5
    a_abs = (run / "A_abs.csv").read_text().strip().splitlines()
    assert len(a_abs) == 5
    assert all(float(v) >= 0 for v in a_abs[0].split(","))


def test_eval_dimension_mismatch_is_data_error(tmp_path):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)
    run = tmp_path / "run"
    assert main(["fit", "--config", cfg, "--out", str(run)]) == EXIT_OK
    other = run_synth(tmp_path, name="other", d=11)
    ecfg = write_config(
        tmp_path / "eval.json",
        {"model": str(run / "model.json"), "test": str(other / "test.csv")},
    )
    assert main(["eval", "--config", ecfg, "--out", str(run)]) == EXIT_DATA


def test_eval_classification_flag(tmp_path):
    _, run = run_fit_eval(tmp_path)
    ecfg = write_config(
        tmp_path / "eval2.json",
        {"model": str(run / "model.json"),
         "test": str(tmp_path / "inst" / "test.csv")},
    )
    assert main(["eval", "--config", ecfg, "--out", str(run), "--classification"]) == EXIT_OK
    metrics = load_json(run / "metrics.json")
    assert 0.0 <= metrics["accuracy"] <= 1.0


SWEEP_GRID = [
    {"lambda": 0.001, "mu": 0.5, "epsilon": 0.1, "inner_tol": 1e-5,
     "max_inner": 1000, "max_outer": 10, "outer_tol": 1e-4},
    {"lambda": 0.1, "mu": 0.5, "epsilon": 0.1, "inner_tol": 1e-5,
     "max_inner": 1000, "max_outer": 10, "outer_tol": 1e-4},
]


def sweep_config(tmp_path, **overrides):
    cfg = {
        "ratios": [0.4], "T_values": [5], "replicates": 2,
        "d": 20, "n_train": 21, "n_test": 30, "folds": 3, "seed": 2,
        "kernel": {"kind": "linear"}, "grid": SWEEP_GRID,
    }
    cfg.update(overrides)
    return write_config(tmp_path / "sweep.json", cfg)


def test_sweep_minimal_three_rows_per_instance(tmp_path):
    cfg = sweep_config(tmp_path, replicates=1)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = (out / "sweep_results.csv").read_text().splitlines()
    assert lines[0] == "ratio,T,replicate,mode,nmse,support_f1,wall_time"
    assert len(lines) == 4  # header + one row per mode
    modes = [ln.split(",")[3] for ln in lines[1:]]
    assert modes == ["skmtl", "stl", "gt"]


def test_sweep_summary_matches_hand_average(tmp_path):
    cfg = sweep_config(tmp_path)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = [ln.split(",") for ln in (out / "sweep_results.csv").read_text().splitlines()[1:]]
    by_mode = {}
    for r in rows:
        by_mode.setdefault(r[3], []).append(float(r[4]))
    summary = [ln.split(",") for ln in (out / "summary.csv").read_text().splitlines()[1:]]
    pooled = {r[2]: (float(r[3]), float(r[4])) for r in summary if r[1] == "all"}
    for mode, scores in by_mode.items():
        assert pooled[mode][0] == pytest.approx(np.mean(scores), rel=1e-9)
        assert pooled[mode][1] == pytest.approx(np.std(scores), rel=1e-9, abs=1e-12)
    failures = (out / "failures.csv").read_text().splitlines()
    assert failures == ["ratio,T,replicate,mode,error"]


def test_sweep_rows_deterministic_and_jobs_invariant(tmp_path):
    cfg = sweep_config(tmp_path, replicates=1)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["sweep", "--config", cfg, "--out", str(out2), "--jobs", "2"]) == EXIT_OK

    def strip_wall(p):
        return [",".join(ln.split(",")[:-1]) for ln in p.read_text().splitlines()]

    assert strip_wall(out1 / "sweep_results.csv") == strip_wall(out2 / "sweep_results.csv")


def test_sweep_cell_failures_recorded_run_continues(tmp_path):
    # folds > n_train makes every cv call fail; the sweep must still
    # write all three files and exit 0
    cfg = sweep_config(tmp_path, replicates=1, folds=50)
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    failures = (out / "failures.csv").read_text().splitlines()
    assert len(failures) == 4  # header + 3 failed cells
    assert "InvalidInput" in failures[1]
    results = (out / "sweep_results.csv").read_text().splitlines()
    assert len(results) == 1  # header only
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[1].endswith(",0,1")  # 0 successes, 1 failure


def test_usage_errors(tmp_path):
    assert main(["synth"]) == EXIT_USAGE  # --config required
    assert main(["bogus-command"]) == EXIT_USAGE
    assert main(["synth", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    cfg = write_config(tmp_path / "s.json", {"T": 5, "support_ratio": 0.4, "d": 20})
    assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE  # no train key
    inst = run_synth(tmp_path)
    fcfg = fit_config(tmp_path, inst)
    assert main(["fit", "--config", fcfg, "--mode", "nope", "--out", str(tmp_path / "x")]) == EXIT_USAGE
    assert main(["synth", "--config", cfg, "--jobs", "0", "--out", str(tmp_path / "x")]) == EXIT_USAGE


def test_malformed_config_is_data_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["synth", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_internal_error_exit_code(tmp_path, monkeypatch):
    inst = run_synth(tmp_path)
    cfg = fit_config(tmp_path, inst)

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic crash")

    monkeypatch.setattr("skmtl.cli.fit", boom)
    assert main(["fit", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_INTERNAL


def test_help_exits_zero():
    assert main(["--help"]) == EXIT_OK
