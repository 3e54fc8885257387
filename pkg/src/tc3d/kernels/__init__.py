"""Kernel backend selection.

The compiled extension (_fast, built from _fast.pyx) is used when
importable; otherwise the pure-Python reference takes over.  Set
TC3D_BACKEND=python or TC3D_BACKEND=compiled to force a choice —
forcing 'compiled' raises if the extension is missing, so CI can assert
the fast path is actually exercised.

benchmarks/bench_kernels.py compares the two.
"""

import os

from . import _pyref

_forced = os.environ.get("TC3D_BACKEND", "").strip().lower()

_impl = None
if _forced in ("", "auto", "compiled", "c", "fast"):
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = None
        if _forced in ("compiled", "c", "fast"):
            raise ImportError(
                "TC3D_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            )
if _impl is None:
    _impl = _pyref

BACKEND = _impl.BACKEND_NAME
metropolis_sweep = _impl.metropolis_sweep
sweep_record = _impl.sweep_record
gray_logsumexp = _impl.gray_logsumexp
coset_class_masses = _impl.coset_class_masses


def compiled_available():
    try:
        from . import _fast  # noqa: F401
    except ImportError:
        return False
    return True


def merge_logsumexp(pairs):
    """Combine streaming (m, s) partial sums; associative, order-fixed."""
    import math

    m = -math.inf
    s = 0.0
    for mi, si in pairs:
        if si == 0.0:
            continue
        if mi > m:
            s = s * math.exp(m - mi) + si
            m = mi
        else:
            s += si * math.exp(mi - m)
    return m, s
