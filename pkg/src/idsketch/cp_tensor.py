"""CP tensors and rank reduction by selecting rank-1 terms.

A CP tensor is a weighted sum of R rank-1 terms, each the outer product of
one unit-norm column per mode. Rank reduction keeps K of the R terms and
recomputes the weights so the smaller tensor tracks the original. All exact
Frobenius geometry goes through the Gram Hadamard identity (the Gram matrix
of the flattened rank-1 terms is the elementwise product of the per-mode
factor Gram matrices), so tensors are never densified outside of tests.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .linalg import DEFAULT_RANK_TOL, PivotedQr, as_csc, as_dense
from .matrix_id import DEFAULT_OVERSAMPLE, _coeffs_from_pivoted, matrix_id
from .mmio import read_matrix_market, write_matrix_market
from .sketch import KrGaussianOp, TensorSketchOp

TENSOR_METHODS = ("gram", "gaussian", "tensorsketch")

_MAX_DENSE_ENTRIES = 50_000_000


def _column_norms(factor):
    if sp.issparse(factor):
        return np.sqrt(np.asarray(factor.power(2).sum(axis=0)).ravel())
    return np.linalg.norm(factor, axis=0)


def _scale_columns(factor, scale):
    if sp.issparse(factor):
        return as_csc(factor @ sp.diags_array(scale))
    return factor * scale


class CpTensor:
    """CP-format tensor: `weights` (length R, nonnegative) plus one factor
    matrix per mode, each (I_n, R) with unit 2-norm columns.

    The constructor normalizes factor columns, folding norms (and the sign
    needed to keep weights nonnegative, applied to the first mode) into the
    weights. Zero columns contribute weight 0, get replaced by an arbitrary
    unit vector, and are recorded in `zero_columns`. Instances are treated
    as immutable and are safe to share across threads.
    """

    def __init__(self, weights, factors):
        if len(factors) == 0:
            raise ValueError("need at least one factor matrix")
        factors = [
            as_csc(f) if sp.issparse(f) else as_dense(f, name=f"factor {n}")
            for n, f in enumerate(factors)
        ]
        rank = factors[0].shape[1]
        for n, f in enumerate(factors):
            if f.shape[1] != rank:
                raise ValueError(
                    f"factor {n} has {f.shape[1]} columns, expected {rank}"
                )
        weights = np.asarray(weights, dtype=np.float64).copy()
        if weights.shape != (rank,):
            raise ValueError(f"weights must have length {rank}")
        if not np.isfinite(weights).all():
            raise ValueError("weights must be finite")

        zero_cols = np.zeros(rank, dtype=bool)
        normalized = []
        for factor in factors:
            norms = _column_norms(factor)
            zero = norms == 0.0
            zero_cols |= zero
            # columns already unit to round-off are kept bit-identical, so
            # selecting terms out of a normalized tensor is an exact
            # column-subset operation
            norms = np.where(np.abs(norms - 1.0) <= 1e-12, 1.0, norms)
            if np.any(norms != 1.0):
                factor = _scale_columns(factor, 1.0 / np.where(zero, 1.0, norms))
            if zero.any():
                factor = _set_unit_columns(factor, np.flatnonzero(zero))
            weights *= np.where(zero, 0.0, norms)
            normalized.append(factor)
        negative = weights < 0.0
        if negative.any():
            flip = np.where(negative, -1.0, 1.0)
            normalized[0] = _scale_columns(normalized[0], flip)
            weights = np.abs(weights)

        self.weights = weights
        self.factors = normalized
        self.zero_columns = np.flatnonzero(zero_cols)

    @property
    def rank(self):
        return self.weights.size

    @property
    def ndim(self):
        return len(self.factors)

    @property
    def mode_dims(self):
        return tuple(f.shape[0] for f in self.factors)

    @property
    def total_entries(self):
        return int(np.prod(self.mode_dims))

    def select(self, cols, weights):
        """CP tensor built from the given term indices and new weights."""
        return CpTensor(weights, [f[:, cols] for f in self.factors])

    def to_dense(self, max_entries=_MAX_DENSE_ENTRIES):
        """Materialize the full tensor (testing and small problems only)."""
        if self.total_entries > max_entries:
            raise ValueError("tensor too large to densify")
        out = np.zeros(self.mode_dims)
        for r in range(self.rank):
            term = np.array(self.weights[r])
            for f in self.factors:
                col = f[:, [r]].toarray().ravel() if sp.issparse(f) else f[:, r]
                term = np.multiply.outer(term, col)
            out += term
        return out


def _set_unit_columns(factor, cols):
    if sp.issparse(factor):
        lil = factor.tolil()
        for c in cols:
            lil[:, c] = 0.0
            lil[0, c] = 1.0
        return as_csc(lil)
    factor = factor.copy()
    factor[:, cols] = 0.0
    factor[0, cols] = 1.0
    return factor


def _gram(weights, factors):
    """diag(weights) @ (hadamard of factor Grams) @ diag(weights).

    Weights may be signed here; the public gram_hadamard goes through a
    CpTensor whose weights are nonnegative.
    """
    rank = len(weights)
    out = np.ones((rank, rank))
    for factor in factors:
        if sp.issparse(factor):
            gram = (factor.T @ factor).toarray()
        else:
            gram = factor.T @ factor
        out *= gram
    out *= weights[None, :]
    out *= weights[:, None]
    return out


def gram_hadamard(x):
    """Gram matrix of the flattened weighted rank-1 terms, computed one mode
    at a time in O(R^2 sum_n I_n); symmetric PSD up to round-off."""
    return _gram(x.weights, x.factors)


def cp_norm(x):
    """Exact Frobenius norm of a CP tensor via the Gram Hadamard identity."""
    total = gram_hadamard(x).sum()
    return float(np.sqrt(max(total, 0.0)))


def _hstack_factors(a, b):
    if sp.issparse(a) and sp.issparse(b):
        return sp.hstack([a, b], format="csc")
    a = a.toarray() if sp.issparse(a) else a
    b = b.toarray() if sp.issparse(b) else b
    return np.hstack([a, b])


def cp_diff_norm(x, y):
    """Exact Frobenius norm of the difference of two CP tensors.

    Concatenates the terms of `y` with negated weights onto `x` and takes
    the norm of the combined tensor; a clamp at zero guards round-off
    before the square root.
    """
    if x.mode_dims != y.mode_dims:
        raise ValueError(
            f"mode dimensions disagree: {x.mode_dims} vs {y.mode_dims}"
        )
    weights = np.concatenate([x.weights, -y.weights])
    factors = [_hstack_factors(a, b) for a, b in zip(x.factors, y.factors)]
    total = _gram(weights, factors).sum()
    return float(np.sqrt(max(total, 0.0)))


@dataclass(frozen=True)
class TensorIdResult:
    """Rank reduction output: the reduced tensor, the surviving term indices,
    the coefficient matrix of the underlying matrix ID, and the recombined
    weights new_weights[k] = weights[cols[k]] * coeffs[k, :].sum()."""

    reduced: CpTensor
    cols: np.ndarray
    coeffs: np.ndarray
    new_weights: np.ndarray
    method: str
    numerical_rank: int
    rank_deficient: bool


def _assemble(x, decomp, method):
    new_weights = x.weights[decomp.cols] * decomp.coeffs.sum(axis=1)
    reduced_weights = new_weights
    if decomp.rank_deficient:
        # keep only the numerically independent terms; the rest carry no
        # trustworthy coefficients and are zeroed out of the reduced tensor
        reduced_weights = new_weights.copy()
        reduced_weights[decomp.numerical_rank :] = 0.0
    reduced = x.select(decomp.cols, reduced_weights)
    return TensorIdResult(
        reduced=reduced,
        cols=decomp.cols,
        coeffs=decomp.coeffs,
        new_weights=new_weights,
        method=method,
        numerical_rank=decomp.numerical_rank,
        rank_deficient=decomp.rank_deficient,
    )


def tensor_id_from_sketch(x, sketch, rank, method, rank_tol=DEFAULT_RANK_TOL):
    """Finish a sketched tensor ID: matrix-ID the sketch, recombine weights,
    and assemble the reduced tensor from the selected terms."""
    decomp = matrix_id(sketch, rank, rank_tol=rank_tol)
    return _assemble(x, decomp, method)


def check_tensor_id_args(x, rank, sketch_dim, method):
    """Validate the rank/sketch-dimension preconditions of a tensor ID method.

    TensorSketch additionally requires the sketch dimension to stay below
    the number of tensor entries (sketching up is meaningless there).
    Returns the sketch dimension, defaulted to rank + 10.
    """
    if not 1 <= rank <= x.rank:
        raise ValueError(f"rank must be in [1, {x.rank}], got {rank}")
    if method == "gram":
        return None
    if sketch_dim is None:
        sketch_dim = rank + DEFAULT_OVERSAMPLE
    if sketch_dim < rank:
        raise ValueError(
            f"sketch dimension {sketch_dim} is below the target rank {rank}"
        )
    if method == "tensorsketch" and sketch_dim >= x.total_entries:
        raise ValueError(
            f"sketch dimension {sketch_dim} must be < {x.total_entries} tensor entries"
        )
    return sketch_dim


def tensorsketch_id(x, rank, sketch_dim=None, seed=None, rank_tol=DEFAULT_RANK_TOL):
    """Rank reduction via a TensorSketch of the flattened rank-1 terms.

    Costs O(N (nnz + R L log L) + L^2 R) for an N-mode rank-R input with
    sketch dimension L (default rank + 10); L must stay below the number of
    tensor entries.
    """
    sketch_dim = check_tensor_id_args(x, rank, sketch_dim, "tensorsketch")
    op = TensorSketchOp(x.mode_dims, sketch_dim, seed=seed)
    sketch = op.apply(x.factors, x.weights)
    return tensor_id_from_sketch(x, sketch, rank, "tensorsketch", rank_tol=rank_tol)


def gaussian_tensor_id(x, rank, sketch_dim=None, seed=None, rank_tol=DEFAULT_RANK_TOL):
    """Rank reduction via the Khatri-Rao structured Gaussian sketch,
    accumulated one mode at a time."""
    sketch_dim = check_tensor_id_args(x, rank, sketch_dim, "gaussian")
    op = KrGaussianOp(x.mode_dims, sketch_dim, seed=seed)
    sketch = op.apply(x.factors, x.weights)
    return tensor_id_from_sketch(x, sketch, rank, "gaussian", rank_tol=rank_tol)


@dataclass(frozen=True)
class _GramDecomp:
    coeffs: np.ndarray
    cols: np.ndarray
    numerical_rank: int
    rank_deficient: bool


def gram_tensor_id(x, rank, gram=None, rank_tol=DEFAULT_RANK_TOL):
    """Deterministic rank reduction through the R-by-R Gram matrix.

    Pivots on the Gram matrix and derives the coefficients from an
    unpivoted economy QR of the selected rows, per the symmetric-ID
    construction. Cheap (no sketch) but the Gram matrix squares the
    conditioning of the underlying problem, so very small residuals are
    limited to about the square root of machine precision.
    """
    check_tensor_id_args(x, rank, None, "gram")
    g = gram_hadamard(x) if gram is None else np.asarray(gram, dtype=np.float64)
    _, _, perm = scipy.linalg.qr(g, mode="economic", pivoting=True)
    cols = perm[:rank].copy()
    # coefficients from the unpivoted QR of the selected Gram rows, with the
    # columns in pivot order so the leading block is the selected one
    b = g[:, cols].T[:, perm]
    rt = scipy.linalg.qr(b, mode="economic")[1][:rank, :]
    diag = np.abs(np.diag(rt))
    lead = diag[0]
    numerical_rank = 0 if lead == 0.0 else int(np.count_nonzero(diag > rank_tol * lead))
    pivoted = PivotedQr(
        q=np.empty((0, 0)), r=rt, perm=perm, numerical_rank=numerical_rank
    )
    coeffs, deficient = _coeffs_from_pivoted(pivoted, rank, rank_tol)
    decomp = _GramDecomp(
        coeffs=coeffs,
        cols=cols,
        numerical_rank=numerical_rank,
        rank_deficient=deficient,
    )
    return _assemble(x, decomp, "gram")


def save_cp_dir(path, x):
    """Write a CP tensor as a directory: meta.json, svalues.txt (one weight
    per line, 17 significant digits), and factor_1.mtx .. factor_N.mtx."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "n_modes": x.ndim,
        "rank": x.rank,
        "mode_dims": list(x.mode_dims),
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    lines = "".join(f"{w:.17g}\n" for w in x.weights)
    (path / "svalues.txt").write_text(lines)
    for n, factor in enumerate(x.factors, start=1):
        write_matrix_market(path / f"factor_{n}.mtx", factor)


def load_cp_dir(path):
    """Read a CP tensor directory written by save_cp_dir; factor columns are
    re-normalized on load."""
    path = Path(path)
    meta = json.loads((path / "meta.json").read_text())
    weights = np.array(
        [float(line) for line in (path / "svalues.txt").read_text().split()]
    )
    factors = [
        read_matrix_market(path / f"factor_{n}.mtx")
        for n in range(1, meta["n_modes"] + 1)
    ]
    x = CpTensor(weights, factors)
    if x.rank != meta["rank"] or list(x.mode_dims) != list(meta["mode_dims"]):
        raise ValueError(f"CP directory {path} is inconsistent with its meta.json")
    return x
