"""Backend selection for the hot loops.

Numba is used when importable unless ``SPINPAT_DISABLE_NUMBA`` is set to a
truthy value; the pure-numpy implementations are always available and can
be forced at runtime with :func:`use_backend`.
"""
from __future__ import annotations

import contextlib
import os

_DISABLED = os.environ.get("SPINPAT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("disabled by SPINPAT_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


_backend = "numba" if HAVE_NUMBA else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    old = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)


def thread_cap() -> int:
    """Worker count for independent runs, capped by ``SPINPAT_THREADS``."""
    raw = os.environ.get("SPINPAT_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, cap)
