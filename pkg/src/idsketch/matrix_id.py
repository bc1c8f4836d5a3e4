"""Interpolative decomposition of matrices.

A rank-k ID approximates A by A[:, cols] @ coeffs, where `cols` names k
actual columns of A and `coeffs` is a well-conditioned coefficient matrix
that contains the k-by-k identity in the selected columns. The
deterministic route pivots on A itself; the sketched routes (CountSketch,
Gaussian, SRFT) pivot on a small row sketch of A and inherit its column
selection, which is what makes them fast on large sparse inputs.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .linalg import DEFAULT_RANK_TOL, as_csc, as_dense, cpqr, triangular_solve
from .sketch import CountSketchOp, GaussianOp, SrftOp

MATRIX_METHODS = ("deterministic", "gaussian", "srft", "countsketch")
DEFAULT_OVERSAMPLE = 10


@dataclass(frozen=True)
class InterpolativeDecomposition:
    """Rank-k column ID: coeffs is (k, cols) with an exact identity in the
    columns listed by `cols`; numerical_rank < rank marks instances where
    the pivoted triangle needed diagonal regularization."""

    coeffs: np.ndarray
    cols: np.ndarray
    rank: int
    method: str
    numerical_rank: int
    rank_deficient: bool

    def reconstruct(self, a):
        """Dense rank-k approximation A[:, cols] @ coeffs of `a`."""
        sel = a[:, self.cols]
        out = sel @ self.coeffs
        if sp.issparse(out):
            out = out.toarray()
        return np.asarray(out)

    def to_dict(self):
        """JSON-ready form; column indices are 0-based."""
        return {
            "method": self.method,
            "k": int(self.rank),
            "j": [int(c) for c in self.cols],
            "p": self.coeffs.tolist(),
            "numerical_rank": int(self.numerical_rank),
            "rank_deficient": bool(self.rank_deficient),
        }


def _coeffs_from_pivoted(factored, rank, rank_tol):
    """Coefficient matrix from a rank-`rank` pivoted QR of the target.

    Diagonal entries of the leading triangle below rank_tol * |r00| are
    floored to that value before the solve, so numerically rank-deficient
    inputs produce a usable (flagged) decomposition instead of failing.
    """
    r = factored.r
    perm = factored.perm
    ncols = perm.size
    r11 = r[:rank, :rank]
    r12 = r[:rank, rank:]
    deficient = factored.numerical_rank < rank
    lead = abs(r11[0, 0])
    if lead == 0.0:
        # zero input: any column set works, coefficients carry no information
        t = np.zeros((rank, ncols - rank))
    else:
        if deficient:
            r11 = r11.copy()
            floor = rank_tol * lead
            d = np.diag(r11)
            small = np.flatnonzero(np.abs(d) < floor)
            r11[small, small] = np.where(d[small] < 0.0, -floor, floor)
        t = triangular_solve(r11, r12) if ncols > rank else np.zeros((rank, 0))
    coeffs = np.zeros((rank, ncols))
    coeffs[np.arange(rank), perm[:rank]] = 1.0
    coeffs[:, perm[rank:]] = t
    return coeffs, deficient


def matrix_id(a, rank, rank_tol=DEFAULT_RANK_TOL):
    """Deterministic rank-`rank` ID of a dense matrix via column-pivoted QR.

    Parameters
    ----------
    a : array_like
        Dense (rows, cols) matrix.
    rank : int
        Number of columns to select, 1 <= rank <= min(rows, cols).

    Returns
    -------
    InterpolativeDecomposition
        With `cols` the first `rank` QR pivots and the identity submatrix
        invariant holding exactly by construction.
    """
    a = as_dense(a)
    factored = cpqr(a, rank, rank_tol=rank_tol)
    coeffs, deficient = _coeffs_from_pivoted(factored, rank, rank_tol)
    return InterpolativeDecomposition(
        coeffs=coeffs,
        cols=factored.perm[:rank].copy(),
        rank=rank,
        method="deterministic",
        numerical_rank=factored.numerical_rank,
        rank_deficient=deficient,
    )


def check_matrix_id_args(a, rank, sketch_dim, method="countsketch"):
    """Validate the rank/sketch-dimension preconditions of a sketched matrix
    ID; returns the sketch dimension, defaulted to rank + 10.

    Requires rank <= sketch_dim < rows (a sketch at least as tall as the
    input is pointless; use the deterministic method instead).
    """
    rows, ncols = a.shape
    if not 1 <= rank <= ncols:
        raise ValueError(f"rank must be in [1, {ncols}], got {rank}")
    if method == "deterministic":
        if rank > min(rows, ncols):
            raise ValueError(f"rank must be <= {min(rows, ncols)}, got {rank}")
        return None
    if sketch_dim is None:
        sketch_dim = rank + DEFAULT_OVERSAMPLE
    if sketch_dim < rank:
        raise ValueError(
            f"sketch dimension {sketch_dim} is below the target rank {rank}"
        )
    if sketch_dim >= rows:
        raise ValueError(
            f"sketch dimension {sketch_dim} must be < {rows} input rows; "
            "use matrix_id directly instead"
        )
    return sketch_dim


def matrix_sketch(a, method, sketch_dim, seed=None, surjective=True):
    """Row sketch of `a` for the given randomized method.

    Returns the dense sketch whose ID is also an ID of `a` (the SRFT sketch
    has 2 * sketch_dim rows in its real representation).
    """
    rows = a.shape[0]
    if method == "countsketch":
        op = CountSketchOp(rows, sketch_dim, seed=seed, surjective=surjective)
    elif method == "gaussian":
        op = GaussianOp(rows, sketch_dim, seed=seed)
    elif method == "srft":
        op = SrftOp(rows, sketch_dim, seed=seed)
    else:
        raise ValueError(f"unknown sketch method {method!r}")
    return op.apply(a)


def _sketched_id(a, rank, sketch_dim, seed, method, rank_tol, surjective=True):
    a = as_csc(a) if sp.issparse(a) else as_dense(a)
    sketch_dim = check_matrix_id_args(a, rank, sketch_dim, method)
    sketch = matrix_sketch(a, method, sketch_dim, seed=seed, surjective=surjective)
    base = matrix_id(sketch, rank, rank_tol=rank_tol)
    return replace(base, method=method)


def countsketch_id(
    a, rank, sketch_dim=None, seed=None, rank_tol=DEFAULT_RANK_TOL, surjective=True
):
    """Randomized ID from a CountSketch of the rows of `a`.

    The sketch costs one pass over the nonzeros; the ID of the
    (sketch_dim, cols) sketch then selects the columns. Surjective bucket
    maps (the default) keep the sketch operator itself full rank. The
    default sketch_dim is rank + 10.
    """
    return _sketched_id(
        a, rank, sketch_dim, seed, "countsketch", rank_tol, surjective=surjective
    )


def gaussian_id(a, rank, sketch_dim=None, seed=None, rank_tol=DEFAULT_RANK_TOL):
    """Randomized ID from a dense Gaussian row sketch of `a`."""
    return _sketched_id(a, rank, sketch_dim, seed, "gaussian", rank_tol)


def srft_id(a, rank, sketch_dim=None, seed=None, rank_tol=DEFAULT_RANK_TOL):
    """Randomized ID from a subsampled randomized Fourier sketch of `a`.

    Sparse input is densified in bounded column blocks before the FFT.
    """
    return _sketched_id(a, rank, sketch_dim, seed, "srft", rank_tol)
