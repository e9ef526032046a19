"""Backend selection for the hot loops.

The Cython extension is used when it has been built; otherwise the numpy
implementation is loaded.  Set ``AETA_LAB_PURE_PYTHON=1`` to force the
fallback.
"""

import os

import numpy as np

from aeta_lab import _kernels_py

if os.environ.get("AETA_LAB_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from aeta_lab import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"


def lfsr_period(length: int, tap_mask: int, seed: int) -> int:
    return int(_impl.lfsr_period(length, tap_mask, seed))


def key_loglik(W, bad, KS, backend=None):
    """Sum per-symbol log weights along every key's running-key path.

    Parameters
    ----------
    W : ndarray, shape (T, n, B)
        Log weight of basis ``b`` at symbol ``i`` of trial ``t``.
    bad : ndarray of uint8, shape (T, n, B), or None
        1 where the basis is impossible (zero likelihood) at that symbol.
    KS : ndarray of int32, shape (K, n)
        Basis index used by key ``k`` at symbol ``i``.

    Returns
    -------
    logL : ndarray, shape (T, K)
    violations : ndarray of int32, shape (T, K)
        Count of impossible symbols; a key is in the support iff this is 0.
    """
    impl = {"cython": _impl, "python": _kernels_py, None: _impl}[backend]
    W = np.ascontiguousarray(W, dtype=np.float64)
    KS = np.ascontiguousarray(KS, dtype=np.int32)
    if bad is not None:
        bad = np.ascontiguousarray(bad, dtype=np.uint8)
    return impl.key_loglik(W, bad, KS)
