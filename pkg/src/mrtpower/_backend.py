"""
Optional numba backend.

Hot numerical kernels in this package are decorated with :func:`njit` from
this module.  When numba is importable and the environment variable
``MRTPOWER_NUMBA`` is not set to ``0``/``false``/``off``, the decorator is
``numba.njit(cache=True)``; otherwise it is the identity and the kernels run
as ordinary Python/numpy code.

Both paths execute the same statements on the same pre-drawn inputs, so they
produce bit-identical results (kernels avoid fastmath / fused operations).

Set ``MRTPOWER_NUMBA=0`` to force the pure-numpy fallback, e.g. for debugging
or on platforms without a working LLVM toolchain.  ``benchmarks/`` contains a
script that times both paths.
"""

import os

__all__ = ["njit", "JIT_ENABLED", "backend_name"]


def _env_wants_jit() -> bool:
    value = os.environ.get("MRTPOWER_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    _HAVE_NUMBA = False

JIT_ENABLED = _HAVE_NUMBA and _env_wants_jit()


def njit(*args, **kwargs):
    """numba.njit(cache=True) when the JIT backend is enabled, else identity.

    Usable both as ``@njit`` and ``@njit(...)``, mirroring numba's API.
    """
    if JIT_ENABLED:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def backend_name() -> str:
    """Human-readable name of the active kernel backend."""
    return "numba" if JIT_ENABLED else "python"
