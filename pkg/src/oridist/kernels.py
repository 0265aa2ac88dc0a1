"""Backend selection for the nearest-vertex hot kernel.

The compiled Cython extension is used when importable; otherwise (or when
``ORIDIST_PURE_PYTHON`` is set to a non-empty value) the numpy fallback
takes over. Both backends implement identical semantics; see
``benchmarks/bench_kernels.py`` for a speed comparison.
"""
import os

from . import _kernels_np

if os.environ.get("ORIDIST_PURE_PYTHON"):
    _impl = _kernels_np
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_np

topk_abs_dot = _impl.topk_abs_dot


def backend_name():
    """'compiled' or 'numpy', whichever is active."""
    return "compiled" if _impl.__name__.endswith("._kernels") else "numpy"
