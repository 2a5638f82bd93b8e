"""Hot inner loops with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and ``HYBRIDALLOC_PURE``
is not set in the environment.  ``BACKEND`` names the active choice.
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if not os.environ.get("HYBRIDALLOC_PURE"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def rate_grid(w, p, gains):
    """Evaluate ``w * sum_k log1p(p * gains_k / w)`` pointwise (nats/s).

    ``w`` and ``p`` broadcast against each other; points with ``w <= 0``
    have rate zero.
    """
    w, p = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(p, dtype=float))
    shape = w.shape
    g = np.ascontiguousarray(np.asarray(gains, dtype=float).ravel())
    out = _impl.rate_grid(
        np.ascontiguousarray(w.ravel()), np.ascontiguousarray(p.ravel()), g
    )
    return np.asarray(out).reshape(shape)


def downdate_forms(z, weights):
    """Rank-one-downdated quadratic forms ``z_k^H A_k^{-1} z_k``, shape (samples, n_t)."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    w = np.ascontiguousarray(np.asarray(weights, dtype=float))
    return np.asarray(_impl.downdate_forms(z, w))


def backends():
    """Map backend name to module for every backend importable here."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
