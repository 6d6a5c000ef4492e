"""Hot numerical kernels with a compiled core and a pure-Python fallback.

The compiled extension (``uavhmma.kernels._core``, built from Cython) is
preferred when importable; otherwise the numpy implementation is used.
Set ``UAVHMMA_PURE_PYTHON=1`` to force the fallback.  Both backends share
the exact semantics documented in ``_numpy_backend``; a parity test and a
benchmark (``benchmarks/bench_kernels.py``) compare them.
"""
import os

from . import _numpy_backend

if os.environ.get("UAVHMMA_PURE_PYTHON"):
    _impl = _numpy_backend
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _numpy_backend
        BACKEND = "python"

LN2 = _numpy_backend.LN2

rate_components = _impl.rate_components
power_sums = _impl.power_sums

# warm-path helpers are numpy-only by design
recover_noma_dl = _numpy_backend.recover_noma_dl
recover_noma_ul = _numpy_backend.recover_noma_ul


def backends():
    """Mapping of available backend names to their modules (for tests/bench)."""
    out = {"python": _numpy_backend}
    try:
        from . import _core  # type: ignore[attr-defined]

        out["cython"] = _core
    except ImportError:
        pass
    return out
