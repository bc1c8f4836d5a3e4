"""Implicit sketch operators.

Every operator here is stored implicitly (hash tables, sign vectors, or a
seed) and applied without forming the sketching matrix, at the cost the
sketch family advertises: one pass over the nonzeros for CountSketch, FFTs
of the exact output length for TensorSketch, full-length mixed-radix FFTs
for the subsampled Fourier sketch. Each operator also knows how to
materialize itself as a dense matrix, which the test suite uses as the
oracle for the implicit paths.

Randomness: operators are seeded independently via `numpy.random.SeedSequence`
children, so per-mode hash maps are mutually independent. Gaussian operators
use a counter-based Philox stream addressed per input row (see
`_normal_rows`), which makes it possible to generate only the rows of the
sketch that multiply nonzero data while still realizing the same operator
as a full materialization. Hash-based sketches (CountSketch, TensorSketch)
replay identically across platforms for a fixed seed; Gaussian streams are
guaranteed reproducible per build only.

All operators are immutable after construction and safe to share across
threads; `apply` is reentrant.
"""

from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy import fft as _fft

_MAX_MATERIALIZE = 50_000_000  # entries; guards accidental huge densifications


def _seed_entropy(seed):
    """Normalize a seed to an integer entropy value (fresh entropy if None)."""
    if seed is None:
        return np.random.SeedSequence().entropy
    if isinstance(seed, np.random.SeedSequence):
        return seed.entropy
    return int(seed)


def _check_rows(a, in_dim, kind):
    if a.ndim != 2:
        raise ValueError("sketch input must be 2-D")
    if a.shape[0] != in_dim:
        raise ValueError(
            f"{kind} expects {in_dim} input rows, got {a.shape[0]}"
        )


class CountSketchOp:
    """Bucket-and-sign sketch S: each input row is sign-flipped and added to
    one of `out_dim` output rows.

    In surjective mode the bucket map is a random permutation of
    [0..out_dim) followed by iid uniform values, so every output row
    receives at least one input row and the densified operator has full
    row rank.

    Parameters
    ----------
    in_dim, out_dim : int
        Input rows I and sketch rows L. Surjective mode requires L <= I.
    seed : int, SeedSequence or None
        Seeds the bucket and sign draws.
    surjective : bool
        Use the full-rank bucket construction.
    """

    def __init__(self, in_dim, out_dim, seed=None, surjective=False):
        if in_dim < 1 or out_dim < 1:
            raise ValueError("dimensions must be positive")
        if surjective and out_dim > in_dim:
            raise ValueError(
                f"surjective mode requires out_dim <= in_dim, got {out_dim} > {in_dim}"
            )
        rng = np.random.default_rng(seed)
        if surjective:
            tail = rng.integers(0, out_dim, size=in_dim - out_dim)
            slots = np.concatenate([np.arange(out_dim, dtype=np.int64), tail])
            bucket = rng.permutation(slots)
        else:
            bucket = rng.integers(0, out_dim, size=in_dim)
        sign = rng.integers(0, 2, size=in_dim).astype(np.float64) * 2.0 - 1.0
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.surjective = bool(surjective)
        self.bucket = bucket.astype(np.int64)
        self.sign = sign

    @classmethod
    def from_arrays(cls, bucket, sign, out_dim=None):
        """Build an operator from explicit bucket and sign arrays."""
        bucket = np.asarray(bucket, dtype=np.int64)
        sign = np.asarray(sign, dtype=np.float64)
        if bucket.ndim != 1 or bucket.shape != sign.shape:
            raise ValueError("bucket and sign must be 1-D arrays of equal length")
        if not np.isin(sign, (-1.0, 1.0)).all():
            raise ValueError("signs must be +-1")
        op = cls.__new__(cls)
        op.in_dim = bucket.size
        op.out_dim = int(bucket.max()) + 1 if out_dim is None else int(out_dim)
        op.surjective = bool(np.unique(bucket).size == op.out_dim)
        op.bucket = bucket
        op.sign = sign
        return op

    @cached_property
    def _matrix(self):
        # one +-1 entry per column; CSR so S @ A streams over rows of A
        cols = np.arange(self.in_dim, dtype=np.int64)
        return sp.csr_array(
            (self.sign, (self.bucket, cols)), shape=(self.out_dim, self.in_dim)
        )

    def apply(self, a):
        """Sketch `a` (sparse or dense, in_dim rows); returns a dense array."""
        _check_rows(a, self.in_dim, "CountSketch")
        out = self._matrix @ a
        if sp.issparse(out):
            out = out.toarray()
        return np.asarray(out, dtype=np.float64)

    def materialize(self):
        return self._matrix.toarray()


class TensorSketchOp:
    """CountSketch whose hash and sign factor across tensor modes.

    The composite bucket of a row tuple (i_1..i_N) is the mod-L sum of the
    per-mode buckets and the composite sign the product of per-mode signs,
    which is what makes the sketch of a Khatri-Rao product computable from
    per-mode CountSketches and length-L FFTs.
    """

    def __init__(self, mode_dims, out_dim, seed=None):
        mode_dims = [int(d) for d in mode_dims]
        if len(mode_dims) == 0:
            raise ValueError("need at least one mode")
        if any(d < 1 for d in mode_dims) or out_dim < 1:
            raise ValueError("dimensions must be positive")
        entropy = _seed_entropy(seed)
        self.mode_dims = tuple(mode_dims)
        self.out_dim = int(out_dim)
        self.seed = entropy
        self.mode_ops = [
            CountSketchOp(d, out_dim, seed=np.random.SeedSequence([entropy, n]))
            for n, d in enumerate(mode_dims)
        ]

    @property
    def in_dim(self):
        return int(np.prod(self.mode_dims))

    def apply(self, factors, weights=None):
        """Sketch the Khatri-Rao product of `factors`, scaled columnwise.

        Equivalent to applying the composite operator to
        (khatri_rao(factors)) @ diag(weights) but costs
        O(sum_n nnz(factor_n) + N R L log L): each factor is CountSketched
        with its mode's hash, transformed with a length-L FFT down each
        column, the transforms are multiplied elementwise, and the product
        is transformed back.
        """
        if len(factors) != len(self.mode_ops):
            raise ValueError(
                f"expected {len(self.mode_ops)} factors, got {len(factors)}"
            )
        ncols = factors[0].shape[1]
        spectrum = None
        for op, factor in zip(self.mode_ops, factors):
            if factor.shape[1] != ncols:
                raise ValueError("factors must share a column count")
            hashed = op.apply(factor)
            transform = _fft.rfft(hashed, axis=0)
            spectrum = transform if spectrum is None else spectrum * transform
        out = _fft.irfft(spectrum, n=self.out_dim, axis=0)
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (ncols,):
                raise ValueError(
                    f"weights must have length {ncols}, got {weights.shape}"
                )
            out = out * weights
        return out

    def composite_bucket(self):
        """Bucket index for every row of the full Khatri-Rao product
        (last mode fastest), as a length-prod(mode_dims) array."""
        total = np.zeros(1, dtype=np.int64)
        for op in self.mode_ops:
            total = (total[:, None] + op.bucket[None, :]).ravel()
        return total % self.out_dim

    def composite_sign(self):
        total = np.ones(1, dtype=np.float64)
        for op in self.mode_ops:
            total = (total[:, None] * op.sign[None, :]).ravel()
        return total

    def materialize(self):
        if self.in_dim * self.out_dim > _MAX_MATERIALIZE:
            raise ValueError("operator too large to materialize")
        dense = np.zeros((self.out_dim, self.in_dim))
        dense[self.composite_bucket(), np.arange(self.in_dim)] = self.composite_sign()
        return dense


class SrftOp:
    """Subsampled randomized Fourier sketch: random sign flips, a full-length
    DFT down each column, and a random sample of `out_dim` distinct rows.

    The DFT length is exactly the input dimension (mixed-radix transform, no
    padding), so sampled rows keep their meaning as rows of the I-point DFT
    matrix. Complex sampled rows are returned in a real representation with
    interleaved parts: output rows 2t and 2t+1 hold the real and imaginary
    parts of sampled row t, giving a (2 * out_dim, cols) array.
    """

    def __init__(self, in_dim, out_dim, seed=None):
        if in_dim < 1 or out_dim < 1:
            raise ValueError("dimensions must be positive")
        if out_dim > in_dim:
            raise ValueError("cannot sample more rows than the DFT length")
        rng = np.random.default_rng(seed)
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.sign = rng.integers(0, 2, size=in_dim).astype(np.float64) * 2.0 - 1.0
        self.sample_rows = rng.choice(in_dim, size=out_dim, replace=False)

    def apply(self, a, block_cols=256):
        """Sketch `a`; sparse input is densified `block_cols` columns at a
        time (block_cols <= 1024) to bound memory."""
        _check_rows(a, self.in_dim, "SRFT")
        if not 1 <= block_cols <= 1024:
            raise ValueError("block_cols must be in [1, 1024]")
        cols = a.shape[1]
        out = np.empty((2 * self.out_dim, cols))
        sparse = sp.issparse(a)
        for start in range(0, cols, block_cols):
            stop = min(start + block_cols, cols)
            block = a[:, start:stop]
            if sparse:
                block = block.toarray()
            block = self.sign[:, None] * block
            z = _fft.fft(block, axis=0)[self.sample_rows]
            out[0::2, start:stop] = z.real
            out[1::2, start:stop] = z.imag
        return out

    def materialize(self):
        """Real (2 * out_dim, in_dim) representation of the operator."""
        if 2 * self.out_dim * self.in_dim > _MAX_MATERIALIZE:
            raise ValueError("operator too large to materialize")
        n = np.arange(self.in_dim)
        z = np.exp(-2j * np.pi * np.outer(self.sample_rows, n) / self.in_dim)
        z = z * self.sign[None, :]
        out = np.empty((2 * self.out_dim, self.in_dim))
        out[0::2] = z.real
        out[1::2] = z.imag
        return out


def _philox_key(entropy, mode):
    return np.random.SeedSequence([entropy, mode]).generate_state(2, np.uint64)


def _normal_rows(key, rows, count):
    """`count` standard normals for each requested row index.

    Row i always yields the same values for a given key no matter which
    other rows are requested: each row reads a fixed counter range of a
    Philox stream (one fresh 256-bit counter block per row), and the
    normals come from Box-Muller over a fixed number of uniforms. A single
    contiguous block of rows is generated in one raw draw.
    """
    rows = np.asarray(rows, dtype=np.int64)
    npairs = (count + 1) // 2
    per_row = 2 * npairs  # uint64 draws consumed per row
    blocks = -(-per_row // 4)  # Philox yields 4 uint64 per counter block
    if rows.size == 0:
        return np.empty((0, count))
    contiguous = rows.size == rows[-1] - rows[0] + 1 and bool(
        np.all(np.diff(rows) == 1)
    )
    if contiguous:
        bg = np.random.Philox(key=key, counter=int(rows[0]) * blocks)
        raw = bg.random_raw(rows.size * blocks * 4).reshape(rows.size, 4 * blocks)
        u = (raw >> np.uint64(11)) * (2.0 ** -53)
        u = u[:, :per_row]
    else:
        u = np.empty((rows.size, per_row))
        for t, i in enumerate(rows):
            bg = np.random.Philox(key=key, counter=int(i) * blocks)
            u[t] = np.random.Generator(bg).random(per_row)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, :npairs]))
    angle = (2.0 * np.pi) * u[:, npairs:]
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    return z[:, :count]


def _nonzero_rows(a):
    if sp.issparse(a):
        return np.unique(sp.csc_array(a).indices)
    return np.flatnonzero(np.any(np.asarray(a) != 0.0, axis=1))


class GaussianOp:
    """Dense iid standard normal sketch of shape (out_dim, in_dim),
    generated lazily from the seed (nothing is stored besides the key)."""

    def __init__(self, in_dim, out_dim, seed=None):
        if in_dim < 1 or out_dim < 1:
            raise ValueError("dimensions must be positive")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.seed = _seed_entropy(seed)
        self._key = _philox_key(self.seed, 0)

    def apply(self, a):
        _check_rows(a, self.in_dim, "Gaussian sketch")
        omega_cols = _normal_rows(self._key, np.arange(self.in_dim), self.out_dim)
        out = omega_cols.T @ a
        if sp.issparse(out):
            out = out.toarray()
        return np.asarray(out)

    def materialize(self):
        if self.in_dim * self.out_dim > _MAX_MATERIALIZE:
            raise ValueError("operator too large to materialize")
        return _normal_rows(self._key, np.arange(self.in_dim), self.out_dim).T


class KrGaussianOp:
    """Gaussian sketch with Khatri-Rao structure: an independent (I_n, L)
    Gaussian factor per mode, applied to CP factors one mode at a time so
    that neither the sketch matrix nor the Khatri-Rao product is formed.

    A GaussianOp with the same seed realizes the same operator as the
    single-mode case of this class.
    """

    def __init__(self, mode_dims, out_dim, seed=None):
        mode_dims = [int(d) for d in mode_dims]
        if len(mode_dims) == 0:
            raise ValueError("need at least one mode")
        if any(d < 1 for d in mode_dims) or out_dim < 1:
            raise ValueError("dimensions must be positive")
        self.mode_dims = tuple(mode_dims)
        self.out_dim = int(out_dim)
        self.seed = _seed_entropy(seed)
        self._keys = [_philox_key(self.seed, n) for n in range(len(mode_dims))]

    @property
    def in_dim(self):
        return int(np.prod(self.mode_dims))

    def apply(self, factors, weights=None):
        """Entry (l, r) of the result is weights[r] * prod_n of the inner
        product between column l of the mode-n Gaussian factor and column r
        of factor n. Gaussian values are generated only for factor rows
        that carry at least one nonzero."""
        if len(factors) != len(self.mode_dims):
            raise ValueError(
                f"expected {len(self.mode_dims)} factors, got {len(factors)}"
            )
        ncols = factors[0].shape[1]
        out = None
        for key, dim, factor in zip(self._keys, self.mode_dims, factors):
            _check_rows(factor, dim, "Khatri-Rao Gaussian sketch")
            if factor.shape[1] != ncols:
                raise ValueError("factors must share a column count")
            rows = _nonzero_rows(factor)
            omega_rows = _normal_rows(key, rows, self.out_dim)
            if sp.issparse(factor):
                sub = sp.csr_array(factor)[rows]
            else:
                sub = np.asarray(factor, dtype=np.float64)[rows]
            term = omega_rows.T @ sub
            if sp.issparse(term):
                term = term.toarray()
            out = term if out is None else out * term
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (ncols,):
                raise ValueError(
                    f"weights must have length {ncols}, got {weights.shape}"
                )
            out = out * weights
        return out

    def materialize_factor(self, n):
        """Dense (I_n, out_dim) Gaussian factor for mode n."""
        return _normal_rows(self._keys[n], np.arange(self.mode_dims[n]), self.out_dim)

    def materialize(self):
        """Dense (out_dim, prod(mode_dims)) operator: the transposed
        Khatri-Rao product of the per-mode factors."""
        if self.in_dim * self.out_dim > _MAX_MATERIALIZE:
            raise ValueError("operator too large to materialize")
        kr = None
        for n in range(len(self.mode_dims)):
            factor = self.materialize_factor(n)
            if kr is None:
                kr = factor
            else:
                kr = (kr[:, None, :] * factor[None, :, :]).reshape(
                    -1, self.out_dim
                )
        return kr.T
