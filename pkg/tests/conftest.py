"""Shared oracle helpers: dense constructions the implicit code paths are
checked against. Kept deliberately naive and independent of the library's
fast paths."""

import numpy as np
import scipy.sparse as sp


def densify(a):
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def khatri_rao(mats):
    """Columnwise Kronecker product, first matrix slowest index."""
    out = densify(mats[0])
    for m in mats[1:]:
        m = densify(m)
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


def dense_countsketch(bucket, sign, out_dim):
    """Dense CountSketch operator built directly from its hash arrays."""
    s = np.zeros((out_dim, bucket.size))
    s[bucket, np.arange(bucket.size)] = sign
    return s


def dense_srft(sign, sample_rows, in_dim):
    """Dense real representation of an SRFT operator: sampled DFT-matrix
    rows with sign flips, real/imaginary parts interleaved."""
    n = np.arange(in_dim)
    z = np.exp(-2j * np.pi * np.outer(sample_rows, n) / in_dim) * sign[None, :]
    out = np.empty((2 * len(sample_rows), in_dim))
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def cp_dense(x):
    """Densify a CP tensor by summing outer products term by term."""
    out = np.zeros(x.mode_dims)
    for r in range(x.rank):
        term = np.array(x.weights[r])
        for f in x.factors:
            term = np.multiply.outer(term, densify(f)[:, r])
        out += term
    return out


def relerr_fro(approx, exact):
    exact = densify(exact)
    return np.linalg.norm(densify(approx) - exact) / np.linalg.norm(exact)
