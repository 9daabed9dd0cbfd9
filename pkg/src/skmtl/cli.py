"""Command-line harness: data generation, training, evaluation, sweeps.

Subcommands
-----------
synth : write a synthetic instance (train/test CSVs, structure matrices,
    manifest) from a JSON config.
fit : train on a dataset CSV and write model.json + report.json.
eval : score a saved model on a test CSV; write metrics.json plus
    structure.dot and A_abs.csv exports.
sweep : sparsity sweep x {skmtl, stl, gt} modes with per-cell cross
    validation; writes sweep_results.csv, summary.csv, failures.csv.

Exit codes: 0 success (a non-converged fit is still success — see the
report status field), 1 usage error, 2 data error, 3 internal error.
The SKMTL_LOG environment variable ({error, info, debug}) controls
stderr logging.
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InvalidInput,
    NotInvertible,
    NotPSD,
    ParseError,
    ZeroVariance,
)
from .evaluation import ABS, accuracy, export_structure_graph, heatmap_csv, nmse, support_recovery
from .io import (
    FORMAT_VERSION,
    hyperparams_from_dict,
    load_json,
    load_model,
    read_dataset_csv,
    read_matrix_csv,
    report_to_dict,
    save_json,
    save_model,
    write_dataset_csv,
    write_matrix_csv,
)
from .kernels import KernelSpec
from .structure import structure_from_matrix
from .synth import SynthConfig, generate, sparsity_sweep
from .trainer import FitMode, cv_grid_search, fit

log = logging.getLogger("skmtl")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

SWEEP_MODES = ("skmtl", "stl", "gt")
SWEEP_HEADER = "ratio,T,replicate,mode,nmse,support_f1,wall_time"
SUMMARY_HEADER = (
    "ratio,T,mode,mean_nmse,std_nmse,mean_support_f1,std_support_f1,replicates,failures"
)
FAILURES_HEADER = "ratio,T,replicate,mode,error"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Merged command parameters: config file contents + flag overrides."""

    command: str
    options: dict = field(repr=False)
    out: str = "."
    seed: int | None = None
    jobs: int = 1
    mode: str | None = None
    classification: bool = False
    base_dir: str = "."


def _require(options: dict, key: str):
    if key not in options:
        raise UsageError(f"config is missing the required key {key!r}")
    return options[key]


def _resolve_path(base_dir: str, p: str) -> str:
    p = str(p)
    cand = p if os.path.isabs(p) else os.path.join(base_dir, p)
    if not os.path.exists(cand):
        raise UsageError(f"path {p!r} from the config does not resolve (tried {cand!r})")
    return cand


def _ensure_out(out: str) -> str:
    try:
        os.makedirs(out, exist_ok=True)
        probe = os.path.join(out, ".write_probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise IOError(f"output directory {out!r} is not writable: {exc}") from exc
    return out


def _kernel_from_options(options: dict) -> KernelSpec:
    raw = options.get("kernel", {"kind": "linear"})
    if "kind" not in raw:
        raise UsageError("kernel config needs a 'kind' key")
    return KernelSpec(kind=raw["kind"], bandwidth=raw.get("bandwidth"))


def _parse_mode(mode_str: str, base_dir: str) -> FitMode:
    if mode_str == "skmtl":
        return FitMode.skmtl()
    if mode_str == "stl":
        return FitMode.single_task()
    if mode_str.startswith("fixed:"):
        path = mode_str[len("fixed:"):]
        if not path:
            raise UsageError("mode 'fixed:' needs a matrix CSV path")
        a = read_matrix_csv(_resolve_path(base_dir, path))
        return FitMode.fixed(structure_from_matrix(a))
    raise UsageError(f"unknown mode {mode_str!r} (expected skmtl, stl, or fixed:PATH)")


def _synth_config(options: dict, seed: int | None) -> SynthConfig:
    known = {"T", "support_ratio", "d", "n_train", "n_test", "noise_var", "seed", "corrupt"}
    unknown = set(options) - known
    if unknown:
        raise UsageError(f"unknown synth config keys: {sorted(unknown)}")
    kwargs = {k: options[k] for k in known & set(options)}
    kwargs["T"] = int(_require(options, "T"))
    kwargs["support_ratio"] = float(_require(options, "support_ratio"))
    if seed is not None:
        kwargs["seed"] = seed
    return SynthConfig(**kwargs)


def cmd_synth(rc: RunConfig) -> int:
    cfg = _synth_config(rc.options, rc.seed)
    out = _ensure_out(rc.out)
    log.info("synth: T=%d ratio=%g seed=%d -> %s", cfg.T, cfg.support_ratio, cfg.seed, out)
    inst = generate(cfg)
    files = {
        "train": "train.csv",
        "test": "test.csv",
        "A_true": "A_true.csv",
        "A_corrupted": "A_corrupted.csv",
    }
    write_dataset_csv(os.path.join(out, files["train"]), inst.train)
    write_dataset_csv(os.path.join(out, files["test"]), inst.test)
    write_matrix_csv(os.path.join(out, files["A_true"]), inst.A_true)
    write_matrix_csv(os.path.join(out, files["A_corrupted"]), inst.A_corrupted)
    manifest = {
        "format": FORMAT_VERSION,
        "command": "synth",
        "seed": cfg.seed,
        "config": {
            "T": cfg.T,
            "support_ratio": cfg.support_ratio,
            "d": cfg.d,
            "n_train": cfg.n_train,
            "n_test": cfg.n_test,
            "noise_var": cfg.noise_var,
            "corrupt": cfg.corrupt,
            "seed": cfg.seed,
        },
        "files": files,
        "shapes": {
            "train": list(inst.train.X.shape[:1]) + [cfg.d + cfg.T],
            "test": [cfg.n_test, cfg.d + cfg.T],
            "A_true": [cfg.T, cfg.T],
            "A_corrupted": [cfg.T, cfg.T],
        },
    }
    save_json(os.path.join(out, "manifest.json"), manifest)
    return EXIT_OK


def cmd_fit(rc: RunConfig) -> int:
    base_dir = rc.base_dir
    train_path = _resolve_path(base_dir, _require(rc.options, "train"))
    kernel = _kernel_from_options(rc.options)
    hp = hyperparams_from_dict(_require(rc.options, "hyperparams"))
    mode_str = rc.mode or rc.options.get("mode", "skmtl")
    mode = _parse_mode(mode_str, base_dir)
    out = _ensure_out(rc.out)

    data = read_dataset_csv(train_path)
    log.info("fit: %s mode=%s n=%d T=%d", train_path, mode_str, data.n_samples, data.n_tasks)
    model, report = fit(data, kernel, hp, mode)
    save_model(os.path.join(out, "model.json"), model, hp)
    save_json(os.path.join(out, "report.json"), report_to_dict(report))
    log.info("fit: status=%s outer=%d", report.status, report.outer_iterations)
    return EXIT_OK


def cmd_eval(rc: RunConfig) -> int:
    base_dir = rc.base_dir
    model = load_model(_resolve_path(base_dir, _require(rc.options, "model")))
    test = read_dataset_csv(_resolve_path(base_dir, _require(rc.options, "test")))
    out = _ensure_out(rc.out)

    d_model = model.train_X.shape[1]
    if test.n_features != d_model:
        raise InvalidInput(
            f"model expects {d_model} features, test data has {test.n_features}"
        )
    if model.n_tasks != test.n_tasks:
        raise InvalidInput(
            f"model has {model.n_tasks} tasks, test data has {test.n_tasks}"
        )
    pred = model.predict(test.X)
    metrics = {"format": FORMAT_VERSION, "nmse": nmse(test.Y, pred)}
    if rc.classification:
        metrics["accuracy"] = accuracy(np.argmax(test.Y, axis=1), pred)
    if "A_true" in rc.options:
        a_true = read_matrix_csv(_resolve_path(base_dir, rc.options["A_true"]))
        rec = support_recovery(model.A.A, a_true, rc.options.get("support_threshold"))
        metrics["support_recovery"] = {
            "precision": rec.precision,
            "recall": rec.recall,
            "f1": rec.f1,
            "threshold": rec.threshold,
        }
    save_json(os.path.join(out, "metrics.json"), metrics)
    labels = [f"task{i}" for i in range(model.n_tasks)]
    with open(os.path.join(out, "structure.dot"), "w") as fh:
        fh.write(export_structure_graph(model.A.A, labels, rc.options.get("edge_threshold", 0.0)))
    with open(os.path.join(out, "A_abs.csv"), "w") as fh:
        fh.write(heatmap_csv(model.A.A, ABS) + "\n")
    log.info("eval: nmse=%.6g", metrics["nmse"])
    return EXIT_OK


def _sweep_job(payload):
    """One (instance, mode) cell; returns a result row or an error row."""
    (key, inst, mode_str, kernel, grid, folds, refit, threshold) = payload
    ratio, t, replicate = key
    try:
        t0 = time.perf_counter()
        if mode_str == "skmtl":
            mode = FitMode.skmtl()
        elif mode_str == "stl":
            mode = FitMode.single_task()
        else:
            mode = FitMode.fixed(structure_from_matrix(inst.A_corrupted))
        best, _ = cv_grid_search(
            inst.train, kernel, grid, folds=folds, mode=mode, seed=inst.config.seed
        )
        final_hp = replace(best, **refit) if refit else best
        model, _ = fit(inst.train, kernel, final_hp, mode)
        score = nmse(inst.test.Y, model.predict(inst.test.X))
        f1 = support_recovery(model.A.A, inst.A_true, threshold).f1
        wall = time.perf_counter() - t0
        return ("ok", key, mode_str, score, f1, wall)
    except Exception as exc:  # recorded per cell; the sweep continues
        return ("error", key, mode_str, f"{type(exc).__name__}: {exc}")


def _sweep_payloads(rc: RunConfig):
    options = rc.options
    ratios = [float(r) for r in _require(options, "ratios")]
    t_values = [int(t) for t in _require(options, "T_values")]
    replicates = int(_require(options, "replicates"))
    grid = [hyperparams_from_dict(h) for h in _require(options, "grid")]
    if not grid:
        raise UsageError("grid must be nonempty")
    folds = int(options.get("folds", 5))
    kernel = _kernel_from_options(options)
    refit = dict(options.get("refit", {}))
    if refit:
        refit = {("lam" if k == "lambda" else k): v for k, v in refit.items()}
    threshold = options.get("support_threshold")
    modes = list(options.get("modes", SWEEP_MODES))
    for m in modes:
        if m not in SWEEP_MODES:
            raise UsageError(f"unknown sweep mode {m!r} (expected one of {SWEEP_MODES})")
    seed = rc.seed if rc.seed is not None else int(options.get("seed", 0))
    base = SynthConfig(
        T=max(t_values),
        support_ratio=1.0,
        d=int(options.get("d", 100)),
        n_train=int(options.get("n_train", 50)),
        n_test=int(options.get("n_test", 100)),
        noise_var=float(options.get("noise_var", 0.1)),
        seed=seed,
    )
    instances = sparsity_sweep(base, ratios, t_values, replicates)
    payloads = []
    for idx, inst in enumerate(instances):
        key = (inst.config.support_ratio, inst.config.T, idx % replicates)
        for mode_str in modes:
            payloads.append((key, inst, mode_str, kernel, tuple(grid), folds, refit, threshold))
    return payloads


def _format_row(key, mode_str, score, f1, wall) -> str:
    ratio, t, rep = key
    return f"{ratio:.10g},{t},{rep},{mode_str},{score:.17g},{f1:.17g},{wall:.6g}"


def _summarize(rows):
    """Aggregate (key, mode, nmse, f1) tuples per (ratio, T, mode) and
    pooled per (ratio, mode); returns summary.csv lines."""
    groups: dict = {}
    for (ratio, t, _rep), mode_str, score, f1, ok in rows:
        for bucket_t in (str(t), "all"):
            g = groups.setdefault((ratio, bucket_t, mode_str), [])
            g.append((score, f1, ok))
    lines = []
    for (ratio, bucket_t, mode_str) in sorted(
        groups,
        key=lambda k: (
            k[0],
            k[1] != "all",
            -1 if k[1] == "all" else int(k[1]),
            SWEEP_MODES.index(k[2]),
        ),
    ):
        entries = groups[(ratio, bucket_t, mode_str)]
        good = [(s, f) for s, f, ok in entries if ok]
        failures = sum(1 for *_x, ok in entries if not ok)
        if good:
            s = np.array([g[0] for g in good])
            f = np.array([g[1] for g in good])
            stats = f"{s.mean():.10g},{s.std():.10g},{f.mean():.10g},{f.std():.10g}"
        else:
            stats = "nan,nan,nan,nan"
        lines.append(f"{ratio:.10g},{bucket_t},{mode_str},{stats},{len(good)},{failures}")
    return lines


def cmd_sweep(rc: RunConfig) -> int:
    payloads = _sweep_payloads(rc)
    out = _ensure_out(rc.out)
    log.info("sweep: %d jobs, jobs=%d -> %s", len(payloads), rc.jobs, out)
    if rc.jobs > 1:
        with ProcessPoolExecutor(max_workers=rc.jobs) as pool:
            results = list(pool.map(_sweep_job, payloads, chunksize=1))
    else:
        results = [_sweep_job(p) for p in payloads]

    result_lines, failure_lines, summary_rows = [], [], []
    for res in results:
        if res[0] == "ok":
            _tag, key, mode_str, score, f1, wall = res
            result_lines.append(_format_row(key, mode_str, score, f1, wall))
            summary_rows.append((key, mode_str, score, f1, True))
        else:
            _tag, key, mode_str, message = res
            ratio, t, rep = key
            failure_lines.append(
                f"{ratio:.10g},{t},{rep},{mode_str},{message.replace(',', ';')}"
            )
            summary_rows.append((key, mode_str, float("nan"), float("nan"), False))
            log.info("sweep cell failed: %s %s: %s", key, mode_str, message)

    with open(os.path.join(out, "sweep_results.csv"), "w") as fh:
        fh.write(SWEEP_HEADER + "\n")
        fh.write("".join(line + "\n" for line in result_lines))
    with open(os.path.join(out, "summary.csv"), "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        fh.write("".join(line + "\n" for line in _summarize(summary_rows)))
    with open(os.path.join(out, "failures.csv"), "w") as fh:
        fh.write(FAILURES_HEADER + "\n")
        fh.write("".join(line + "\n" for line in failure_lines))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skmtl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (
        ("synth", cmd_synth),
        ("fit", cmd_fit),
        ("eval", cmd_eval),
        ("sweep", cmd_sweep),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers (sweep)")
        p.add_argument(
            "--mode", default=None, help="skmtl, stl, or fixed:PATH (fit only)"
        )
        p.add_argument("--classification", action="store_true",
                       help="argmax accuracy scoring (eval)")
        p.set_defaults(func=func)
    return parser


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("SKMTL_LOG", "error").lower(), logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if not os.path.exists(args.config):
            raise UsageError(f"config file {args.config!r} not found")
        options = load_json(args.config)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        rc = RunConfig(
            command=args.command,
            options=options,
            out=args.out,
            seed=args.seed,
            jobs=args.jobs,
            mode=args.mode,
            classification=args.classification,
            base_dir=os.path.dirname(os.path.abspath(args.config)),
        )
        return args.func(rc)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InvalidInput, NotPSD, NotInvertible, ZeroVariance, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # CLI boundary: anything else is an internal error
        log.exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
