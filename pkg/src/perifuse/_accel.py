"""Kernel backend selection.

The hot pairwise kernels (template pair scoring, heatmap divergence) run
through numba when it is importable. Setting the environment variable
``PERIFUSE_NUMBA`` to ``0``, ``false``, ``off``, or ``no`` forces the
pure-NumPy lane; both lanes share one calling convention and agree to
floating-point noise (summation order differs, values do not).
"""

import os

from . import _kernels_numpy

_DISABLE = ("0", "false", "off", "no")


def _numba_wanted() -> bool:
    return os.environ.get("PERIFUSE_NUMBA", "1").strip().lower() not in _DISABLE


if _numba_wanted():
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = _kernels_numpy
        BACKEND = "numpy"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"

cosine_pairs = _impl.cosine_pairs
chi2_pairs = _impl.chi2_pairs
jsd_flat = _impl.jsd_flat
kl_flat = _impl.kl_flat
