"""Numpy implementations of the hot loops (used when the extension is absent)."""
import numpy as np


def rate_grid(w, p, gains):
    """Per-point rate w * sum_k log1p(p * g_k / w), zero where w == 0.

    ``w`` and ``p`` are 1-D float64 arrays of equal length, ``gains`` 1-D.
    """
    out = np.zeros(w.shape[0])
    pos = w > 0
    if not pos.any() or gains.size == 0:
        return out
    wp = w[pos]
    ratio = p[pos] / wp
    out[pos] = wp * np.log1p(ratio[:, None] * gains[None, :]).sum(axis=1)
    return out


def downdate_forms(z, weights):
    """Quadratic forms z_k^H A_k^{-1} z_k for every sample and column.

    ``z`` has shape (samples, n_r, n_t); ``A = I + sum_j weights_j z_j z_j^H``
    and ``A_k`` removes the k-th rank-one term (Sherman-Morrison).
    """
    n_s, n_r, _ = z.shape
    a = np.einsum("srk,k,sqk->srq", z, weights, z.conj())
    a += np.eye(n_r)[None, :, :]
    y = np.linalg.solve(a, z)
    q = np.einsum("srk,srk->sk", z.conj(), y).real
    return q / (1.0 - weights[None, :] * q)
