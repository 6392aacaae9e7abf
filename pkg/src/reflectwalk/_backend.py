"""Kernel backend selection.

The compiled extension is used when it imports; set
``REFLECTWALK_PURE_PYTHON=1`` to force the numpy fallback.
"""
import importlib
import os

_FORCE_PURE = os.environ.get("REFLECTWALK_PURE_PYTHON", "") not in ("", "0")


def load(name=None):
    """Return the kernel module ``"cython"`` or ``"python"`` (default: best available)."""
    if name == "python":
        return importlib.import_module("reflectwalk._fallback")
    if name == "cython":
        return importlib.import_module("reflectwalk._kernels")
    if name is not None:
        raise ValueError(f"unknown backend {name!r}")
    if not _FORCE_PURE:
        try:
            return importlib.import_module("reflectwalk._kernels")
        except ImportError:
            pass
    return importlib.import_module("reflectwalk._fallback")


kernels = load()
BACKEND = "cython" if kernels.__name__.endswith("_kernels") else "python"


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        return names
    return ["cython"] + names
