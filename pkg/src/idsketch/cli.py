"""Command-line interface.

Exit codes: 0 on success, 2 on argument/usage errors, 3 on numerical
failure (singular systems, non-finite data).
"""

import json
import sys
import time

import click
import numpy as np

from .bench import ExperimentConfig, derive_seed, run_experiment, write_csv
from .cp_tensor import (
    TENSOR_METHODS,
    cp_diff_norm,
    gaussian_tensor_id,
    gram_tensor_id,
    load_cp_dir,
    save_cp_dir,
    tensorsketch_id,
)
from .estimators import est_spectral_norm, id_residual_operator
from .generators import gen_synthetic_matrix, gen_synthetic_tensor
from .linalg import SingularTriangleError
from .matrix_id import (
    MATRIX_METHODS,
    countsketch_id,
    gaussian_id,
    matrix_id,
    srft_id,
)
from .mmio import read_matrix_market, write_matrix_market

EXIT_ARGUMENT = 2
EXIT_NUMERICAL = 3


def _run(fn):
    try:
        fn()
    except (SingularTriangleError, np.linalg.LinAlgError, FloatingPointError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ARGUMENT)


def _emit(payload, out):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@click.group()
def main():
    """Fast randomized interpolative decomposition of matrices and CP tensors."""


@main.command("matrix-id")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--rank", "-k", type=int, required=True, help="Target rank K.")
@click.option(
    "--method",
    type=click.Choice(MATRIX_METHODS),
    default="countsketch",
    show_default=True,
)
@click.option("--oversample", type=int, default=10, show_default=True,
              help="Sketch rows above the rank (L = K + oversample).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
def matrix_id_cmd(input_path, rank, method, oversample, seed, out):
    """Decompose a Matrix Market file (sparse coordinate or dense array)."""

    def go():
        a = read_matrix_market(input_path)
        sketch_dim = rank + oversample
        t0 = time.perf_counter()
        if method == "deterministic":
            dense = a.toarray() if hasattr(a, "toarray") else a
            decomp = matrix_id(dense, rank)
        elif method == "countsketch":
            decomp = countsketch_id(a, rank, sketch_dim, seed=seed)
        elif method == "gaussian":
            decomp = gaussian_id(a, rank, sketch_dim, seed=seed)
        else:
            decomp = srft_id(a, rank, sketch_dim, seed=seed)
        wall = time.perf_counter() - t0
        apply, adjoint = id_residual_operator(a, decomp)
        est = est_spectral_norm(
            apply, adjoint, cols=a.shape[1], seed=derive_seed(seed, 0xE57)
        )
        payload = {
            "input": input_path,
            "rows": int(a.shape[0]),
            "cols": int(a.shape[1]),
            "method": method,
            "rank": rank,
            "sketch_dim": None if method == "deterministic" else sketch_dim,
            "seed": seed,
            "error_estimate": est.value,
            "error_norm_kind": "spectral-estimated",
            "wall_time_seconds": wall,
            "id": decomp.to_dict(),
        }
        _emit(payload, out)

    _run(go)


@main.command("tensor-id")
@click.argument("cp_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--rank", "-k", type=int, required=True, help="Target rank K.")
@click.option(
    "--method",
    type=click.Choice(TENSOR_METHODS),
    default="tensorsketch",
    show_default=True,
)
@click.option("--oversample", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def tensor_id_cmd(cp_dir, rank, method, oversample, seed, out):
    """Reduce the rank of a CP tensor stored as a directory
    (meta.json, svalues.txt, factor_*.mtx)."""

    def go():
        x = load_cp_dir(cp_dir)
        sketch_dim = rank + oversample
        t0 = time.perf_counter()
        if method == "gram":
            result = gram_tensor_id(x, rank)
        elif method == "tensorsketch":
            result = tensorsketch_id(x, rank, sketch_dim, seed=seed)
        else:
            result = gaussian_tensor_id(x, rank, sketch_dim, seed=seed)
        wall = time.perf_counter() - t0
        err = cp_diff_norm(x, result.reduced)
        payload = {
            "input": cp_dir,
            "n_modes": x.ndim,
            "mode_dims": list(x.mode_dims),
            "terms": x.rank,
            "method": method,
            "rank": rank,
            "sketch_dim": None if method == "gram" else sketch_dim,
            "seed": seed,
            "error_estimate": err,
            "error_norm_kind": "frobenius-exact",
            "wall_time_seconds": wall,
            "id": {
                "method": result.method,
                "k": int(rank),
                "j": [int(c) for c in result.cols],
                "p": result.coeffs.tolist(),
                "new_svalues": result.new_weights.tolist(),
                "numerical_rank": int(result.numerical_rank),
                "rank_deficient": bool(result.rank_deficient),
            },
        }
        _emit(payload, out)

    _run(go)


@main.command()
@click.argument("kind", type=click.Choice(["matrix", "tensor"]))
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="ExperimentConfig JSON.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Results CSV path (default: stdout summary only).")
def bench(kind, config_path, out):
    """Run a benchmark sweep from a config file and emit a results CSV."""

    def go():
        cfg = ExperimentConfig.from_json(config_path)
        if cfg.kind != kind:
            raise ValueError(
                f"config kind {cfg.kind!r} does not match command argument {kind!r}"
            )
        reports, summaries = run_experiment(cfg)
        if out:
            write_csv(out, reports, summaries)
        for s in summaries:
            click.echo(
                f"{s['kind']} {s['method']:>12s} size={s['size']:>8d} "
                f"err_median={s['error_median']:.3e} "
                f"wall_median={s['wall_time_median']:.4f}s "
                f"ok={s['n_ok']}/{s['n_trials']}"
            )

    _run(go)


@main.command()
@click.argument("kind", type=click.Choice(["matrix", "tensor"]))
@click.option("--rows", type=int, default=2000, show_default=True,
              help="Matrix rows / tensor mode dimension.")
@click.option("--cols", type=int, default=500, show_default=True,
              help="Matrix columns / CP terms.")
@click.option("--rank", type=int, default=100, show_default=True,
              help="Spectral knee position.")
@click.option("--modes", type=int, default=5, show_default=True,
              help="Tensor modes (tensor only).")
@click.option("--density", type=float, default=0.005, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Output .mtx file (matrix) or CP directory (tensor).")
def gen(kind, rows, cols, rank, modes, density, seed, out):
    """Generate a synthetic benchmark input and write it to disk."""

    def go():
        if kind == "matrix":
            a = gen_synthetic_matrix(rows, cols, rank, density, seed=seed)
            write_matrix_market(out, a)
            click.echo(f"wrote {a.shape[0]}x{a.shape[1]} matrix, nnz={a.nnz}, to {out}")
        else:
            x = gen_synthetic_tensor(modes, rows, cols, rank, density, seed=seed)
            save_cp_dir(out, x)
            click.echo(
                f"wrote {x.ndim}-mode rank-{x.rank} CP tensor "
                f"(dims {list(x.mode_dims)}) to {out}"
            )

    _run(go)


if __name__ == "__main__":
    main()
