"""File formats: CSV datasets/matrices and JSON artifacts.

Datasets are single CSV files with header ``x0..x{d-1},y0..y{T-1}``.
Matrices are bare CSV grids.  Floats are written with 17 significant
digits, which round-trips IEEE doubles exactly.  JSON artifacts carry a
``format`` tag ("skmtl-v1") and use Python's shortest round-trip float
representation; keys are sorted so identical inputs give identical
bytes.
"""

import json

import numpy as np

from .errors import InvalidInput, ParseError
from .kernels import KernelSpec
from .model import Dataset, Hyperparams, MultiTaskModel, StructureMatrix

__all__ = [
    "FORMAT_VERSION",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "save_json",
    "load_json",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "report_to_dict",
    "hyperparams_to_dict",
    "hyperparams_from_dict",
]

FORMAT_VERSION = "skmtl-v1"


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_dataset_csv(path, data: Dataset) -> None:
    d, t = data.n_features, data.n_tasks
    header = ",".join([f"x{j}" for j in range(d)] + [f"y{j}" for j in range(t)])
    rows = np.hstack([data.X, data.Y])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_dataset_csv(path) -> Dataset:
    """Parse a dataset CSV; malformed content raises ParseError with the
    offending line number (1-based, header is line 1)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    names = lines[0].split(",")
    d = sum(1 for s in names if s.startswith("x"))
    t = sum(1 for s in names if s.startswith("y"))
    expect = [f"x{j}" for j in range(d)] + [f"y{j}" for j in range(t)]
    if t < 1 or d < 1 or names != expect:
        raise ParseError(
            "header must be x0..x{d-1},y0..y{T-1}, got " + lines[0][:80], line=1
        )
    body = [ln for ln in lines[1:] if ln]
    if not body:
        raise ParseError("no data rows", line=2)
    rows = np.empty((len(body), d + t))
    for i, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != d + t:
            raise ParseError(
                f"expected {d + t} fields, got {len(parts)}", line=i + 2
            )
        try:
            rows[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=i + 2) from exc
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.all(np.isfinite(rows), axis=1))[0, 0])
        raise ParseError("non-finite value", line=bad + 2)
    return Dataset(X=rows[:, :d], Y=rows[:, d:])


def write_matrix_csv(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        raise ParseError("empty matrix file", line=1)
    out = []
    width = None
    for i, ln in enumerate(lines):
        parts = ln.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ParseError(f"expected {width} fields, got {len(parts)}", line=i + 1)
        try:
            out.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=i + 1) from exc
    return np.asarray(out)


def save_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(payload, dict):
        raise ParseError("top-level JSON value must be an object", line=1)
    return payload


def hyperparams_to_dict(hp: Hyperparams) -> dict:
    return {
        "lambda": hp.lam,
        "mu": hp.mu,
        "epsilon": hp.epsilon,
        "outer_tol": hp.outer_tol,
        "inner_tol": hp.inner_tol,
        "max_outer": hp.max_outer,
        "max_inner": hp.max_inner,
    }


def hyperparams_from_dict(raw: dict) -> Hyperparams:
    if "lambda" not in raw:
        raise ParseError("hyperparams need a 'lambda' key")
    known = {"lambda", "mu", "epsilon", "outer_tol", "inner_tol", "max_outer", "max_inner"}
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"unknown hyperparameter keys: {sorted(unknown)}")
    kwargs = {("lam" if k == "lambda" else k): v for k, v in raw.items()}
    kwargs.setdefault("mu", 0.5)
    kwargs.setdefault("epsilon", 0.1)
    return Hyperparams(**kwargs)


def _kernel_to_dict(kernel: KernelSpec) -> dict:
    return {"kind": kernel.kind, "bandwidth": kernel.bandwidth}


def _kernel_from_dict(raw: dict) -> KernelSpec:
    if "kind" not in raw:
        raise ParseError("kernel needs a 'kind' key")
    return KernelSpec(kind=raw["kind"], bandwidth=raw.get("bandwidth"))


def model_to_dict(model: MultiTaskModel, hp: Hyperparams | None = None) -> dict:
    payload = {
        "format": FORMAT_VERSION,
        "kernel": _kernel_to_dict(model.kernel),
        "n": model.train_X.shape[0],
        "d": model.train_X.shape[1],
        "T": model.n_tasks,
        "train_X": model.train_X.tolist(),
        "C": model.C.tolist(),
        "A": model.A.A.tolist(),
    }
    if hp is not None:
        payload["hyperparams"] = hyperparams_to_dict(hp)
    return payload


def model_from_dict(payload: dict) -> MultiTaskModel:
    if payload.get("format") != FORMAT_VERSION:
        raise ParseError(f"unsupported format {payload.get('format')!r}")
    for key in ("kernel", "train_X", "C", "A"):
        if key not in payload:
            raise ParseError(f"model is missing the {key!r} key")
    try:
        return MultiTaskModel(
            train_X=np.asarray(payload["train_X"], dtype=float),
            kernel=_kernel_from_dict(payload["kernel"]),
            C=np.asarray(payload["C"], dtype=float),
            A=StructureMatrix(np.asarray(payload["A"], dtype=float)),
        )
    except (InvalidInput, ValueError) as exc:
        raise ParseError(f"invalid model payload: {exc}") from exc


def save_model(path, model: MultiTaskModel, hp: Hyperparams | None = None) -> None:
    save_json(path, model_to_dict(model, hp))


def load_model(path) -> MultiTaskModel:
    return model_from_dict(load_json(path))


def report_to_dict(report) -> dict:
    return {
        "format": FORMAT_VERSION,
        "status": report.status,
        "objective_trace": [float(v) for v in report.objective_trace],
        "inner_iters": [int(v) for v in report.inner_iters],
        "inner_converged": [bool(v) for v in report.inner_converged],
        "outer_iterations": int(report.outer_iterations),
        "wall_time": float(report.wall_time),
    }
