"""Experiment runner: generate synthetic data, decompose with each method,
time the sketch and decomposition phases separately, and emit replayable
per-trial reports plus per-cell summaries."""

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .cp_tensor import (
    TENSOR_METHODS,
    check_tensor_id_args,
    cp_diff_norm,
    gram_hadamard,
    gram_tensor_id,
    tensor_id_from_sketch,
)
from .estimators import est_spectral_norm, id_residual_operator
from .generators import gen_synthetic_matrix, gen_synthetic_tensor
from .matrix_id import (
    MATRIX_METHODS,
    check_matrix_id_args,
    matrix_id,
    matrix_sketch,
)
from .sketch import KrGaussianOp, TensorSketchOp

CSV_HEADER = [
    "kind",
    "method",
    "size",
    "terms",
    "rank",
    "sketch_dim",
    "density",
    "trial",
    "seed",
    "status",
    "error_estimate",
    "error_norm_kind",
    "sketch_time_seconds",
    "wall_time_seconds",
    "row_kind",
    "error_median",
    "error_mean",
    "sketch_time_median",
    "sketch_time_mean",
    "wall_time_median",
    "wall_time_mean",
]


@dataclass
class ExperimentConfig:
    """One benchmark sweep: matrix or tensor data over a list of sizes."""

    kind: str  # "matrix" or "tensor"
    sizes: list
    terms: int  # columns R (matrix) or CP terms R (tensor)
    rank: int
    sketch_dim: int
    density: float
    methods: list
    trials: int = 10
    seed: int = 0
    n_modes: int = 5  # tensor only

    def __post_init__(self):
        if self.kind not in ("matrix", "tensor"):
            raise ValueError(f"kind must be 'matrix' or 'tensor', got {self.kind!r}")
        if self.rank > self.sketch_dim:
            raise ValueError("rank must not exceed sketch_dim")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must be in (0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sizes:
            raise ValueError("sizes must be nonempty")
        known = MATRIX_METHODS if self.kind == "matrix" else TENSOR_METHODS
        for m in self.methods:
            if m not in known:
                raise ValueError(f"unknown {self.kind} method {m!r}")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls(**json.load(fh))


@dataclass
class IdReport:
    """Everything needed to read or replay one benchmark trial."""

    kind: str
    method: str
    size: int
    terms: int
    rank: int
    sketch_dim: int
    density: float
    trial: int
    seed: int
    status: str = "ok"
    error_estimate: float = float("nan")
    error_norm_kind: str = ""
    sketch_time_seconds: float = float("nan")
    wall_time_seconds: float = float("nan")
    parameters: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def derive_seed(master, *tags):
    """Deterministic child seed; independent of scheduling order."""
    return int(
        np.random.SeedSequence([int(master), *map(int, tags)]).generate_state(1)[0]
    )


def run_matrix_trial(a, method, rank, sketch_dim, seed, est_iters=10, est_probes=2):
    """Decompose `a`, timing the sketch and ID phases separately, and
    estimate the spectral-norm error of the result."""
    sketch_dim = check_matrix_id_args(a, rank, sketch_dim, method)
    t0 = time.perf_counter()
    if method == "deterministic":
        dense = a.toarray() if hasattr(a, "toarray") else a
        sketch_time = 0.0
        decomp = matrix_id(dense, rank)
    else:
        sketch = matrix_sketch(a, method, sketch_dim, seed=seed)
        sketch_time = time.perf_counter() - t0
        decomp = replace(matrix_id(sketch, rank), method=method)
    wall = time.perf_counter() - t0
    apply, adjoint = id_residual_operator(a, decomp)
    est = est_spectral_norm(
        apply,
        adjoint,
        cols=a.shape[1],
        iters=est_iters,
        probes=est_probes,
        seed=derive_seed(seed, 0xE57),
    )
    return decomp, est.value, sketch_time, wall


def run_tensor_trial(x, method, rank, sketch_dim, seed):
    """Reduce `x`, timing the sketch (or Gram) phase separately, and compute
    the exact Frobenius error of the result."""
    sketch_dim = check_tensor_id_args(x, rank, sketch_dim, method)
    t0 = time.perf_counter()
    if method == "gram":
        gram = gram_hadamard(x)
        sketch_time = time.perf_counter() - t0
        result = gram_tensor_id(x, rank, gram=gram)
    elif method == "tensorsketch":
        op = TensorSketchOp(x.mode_dims, sketch_dim, seed=seed)
        sketch = op.apply(x.factors, x.weights)
        sketch_time = time.perf_counter() - t0
        result = tensor_id_from_sketch(x, sketch, rank, method)
    elif method == "gaussian":
        op = KrGaussianOp(x.mode_dims, sketch_dim, seed=seed)
        sketch = op.apply(x.factors, x.weights)
        sketch_time = time.perf_counter() - t0
        result = tensor_id_from_sketch(x, sketch, rank, method)
    else:
        raise ValueError(f"unknown tensor method {method!r}")
    wall = time.perf_counter() - t0
    err = cp_diff_norm(x, result.reduced)
    return result, err, sketch_time, wall


def generate_input(cfg, size):
    """Dataset for one sweep size, seeded per size so every trial of every
    method sees the same input."""
    gen_seed = derive_seed(cfg.seed, 0, size)
    if cfg.kind == "matrix":
        return gen_synthetic_matrix(
            size, cfg.terms, cfg.rank, cfg.density, seed=gen_seed
        )
    return gen_synthetic_tensor(
        cfg.n_modes, size, cfg.terms, cfg.rank, cfg.density, seed=gen_seed
    )


def run_experiment(cfg):
    """Run the sweep; returns (trial_reports, summary_rows).

    Per-trial failures are recorded in the report status and do not stop
    the run. Summary rows carry the per-cell medians and means over the
    successful trials.
    """
    reports = []
    for size in cfg.sizes:
        data = generate_input(cfg, size)
        for mi, method in enumerate(cfg.methods):
            for trial in range(cfg.trials):
                seed = derive_seed(cfg.seed, 1, size, mi, trial)
                report = IdReport(
                    kind=cfg.kind,
                    method=method,
                    size=size,
                    terms=cfg.terms,
                    rank=cfg.rank,
                    sketch_dim=cfg.sketch_dim,
                    density=cfg.density,
                    trial=trial,
                    seed=seed,
                    parameters={
                        "n_modes": cfg.n_modes if cfg.kind == "tensor" else None,
                        "master_seed": cfg.seed,
                    },
                )
                try:
                    if cfg.kind == "matrix":
                        _, err, st, wall = run_matrix_trial(
                            data, method, cfg.rank, cfg.sketch_dim, seed
                        )
                        report.error_norm_kind = "spectral-estimated"
                    else:
                        _, err, st, wall = run_tensor_trial(
                            data, method, cfg.rank, cfg.sketch_dim, seed
                        )
                        report.error_norm_kind = "frobenius-exact"
                    report.error_estimate = err
                    report.sketch_time_seconds = st
                    report.wall_time_seconds = wall
                except Exception as exc:  # per-trial failures stay in the report
                    report.status = f"failed: {exc}"
                reports.append(report)
    return reports, summarize(reports)


def summarize(reports):
    """One summary dict per (kind, method, size) cell with medians and means."""
    cells = {}
    for r in reports:
        cells.setdefault((r.kind, r.method, r.size), []).append(r)
    out = []
    for (kind, method, size), group in cells.items():
        ok = [r for r in group if r.status == "ok"]
        tpl = group[0]
        row = {
            "kind": kind,
            "method": method,
            "size": size,
            "terms": tpl.terms,
            "rank": tpl.rank,
            "sketch_dim": tpl.sketch_dim,
            "density": tpl.density,
            "n_ok": len(ok),
            "n_trials": len(group),
        }
        for name, attr in (
            ("error", "error_estimate"),
            ("sketch_time", "sketch_time_seconds"),
            ("wall_time", "wall_time_seconds"),
        ):
            vals = [getattr(r, attr) for r in ok]
            row[f"{name}_median"] = float(np.median(vals)) if vals else float("nan")
            row[f"{name}_mean"] = float(np.mean(vals)) if vals else float("nan")
        out.append(row)
    return out


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return "" if value is None else str(value)


def write_csv(path, reports, summaries):
    """Fixed-schema CSV: per-trial rows then per-cell summary rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in reports:
            writer.writerow(
                [
                    r.kind,
                    r.method,
                    r.size,
                    r.terms,
                    r.rank,
                    r.sketch_dim,
                    _fmt(r.density),
                    r.trial,
                    r.seed,
                    r.status,
                    _fmt(r.error_estimate),
                    r.error_norm_kind,
                    _fmt(r.sketch_time_seconds),
                    _fmt(r.wall_time_seconds),
                    "trial",
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                ]
            )
        for s in summaries:
            writer.writerow(
                [
                    s["kind"],
                    s["method"],
                    s["size"],
                    s["terms"],
                    s["rank"],
                    s["sketch_dim"],
                    _fmt(s["density"]),
                    "",
                    "",
                    f"ok {s['n_ok']}/{s['n_trials']}",
                    "",
                    "",
                    "",
                    "",
                    "summary",
                    _fmt(s["error_median"]),
                    _fmt(s["error_mean"]),
                    _fmt(s["sketch_time_median"]),
                    _fmt(s["sketch_time_mean"]),
                    _fmt(s["wall_time_median"]),
                    _fmt(s["wall_time_mean"]),
                ]
            )
