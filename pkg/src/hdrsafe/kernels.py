"""Backend selection for the denotation kernel.

The compiled extension is used when it was built and the universe fits in 64
bits; otherwise the pure-Python kernel runs. ``use_backend`` lets tests and the
benchmark pin one implementation.
"""

from hdrsafe import _kernel_py
from hdrsafe._kernel_py import DenotationTooLarge  # noqa: F401  (re-export)

try:
    from hdrsafe import _denote_ext
except ImportError:  # extension not built
    _denote_ext = None

NATIVE_AVAILABLE = _denote_ext is not None
BACKEND = "native" if NATIVE_AVAILABLE else "python"


def use_backend(name):
    """Select ``"native"`` or ``"python"``; returns the previous backend."""
    global BACKEND
    if name not in ("native", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "native" and not NATIVE_AVAILABLE:
        raise RuntimeError("native kernel is not built")
    previous, BACKEND = BACKEND, name
    return previous


def eval_code(code, width, cap):
    """Evaluate postfix code over a universe of ``width`` instances."""
    if BACKEND == "native" and width <= 64:
        return _denote_ext.eval_code(code, cap)
    return _kernel_py.eval_code(code, cap)
