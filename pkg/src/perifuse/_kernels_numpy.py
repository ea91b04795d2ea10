"""Pure-NumPy implementations of the hot pairwise kernels.

Pair scoring gathers template rows per pair; work is chunked so a large
protocol (hundreds of thousands of pairs at dim 512) never materialises the
full gathered matrices at once.
"""

import numpy as np

_CHUNK = 8192


def cosine_pairs(matrix, norms, probe_rows, gallery_rows):
    n = probe_rows.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        p = probe_rows[start:stop]
        g = gallery_rows[start:stop]
        dots = np.einsum("ij,ij->i", matrix[p], matrix[g])
        out[start:stop] = dots / (norms[p] * norms[g])
    return out


def chi2_pairs(matrix, probe_rows, gallery_rows):
    n = probe_rows.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        a = matrix[probe_rows[start:stop]]
        b = matrix[gallery_rows[start:stop]]
        num = (a - b) ** 2
        den = a + b
        # components can be exactly zero on both sides; those terms are zero
        terms = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
        out[start:stop] = terms.sum(axis=1)
    return out


def jsd_flat(p, q):
    m = 0.5 * (p + q)
    keep_p = p > 0.0
    keep_q = q > 0.0
    kl_pm = np.sum(p[keep_p] * np.log(p[keep_p] / m[keep_p]))
    kl_qm = np.sum(q[keep_q] * np.log(q[keep_q] / m[keep_q]))
    return 0.5 * kl_pm + 0.5 * kl_qm


def kl_flat(p, q):
    keep = p > 0.0
    if np.any(q[keep] == 0.0):
        return float("inf")
    return float(np.sum(p[keep] * np.log(p[keep] / q[keep])))
