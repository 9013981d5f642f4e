"""FFT entry points with a process-wide worker count.

pocketfft splits a multidimensional transform into independent 1-D
transforms, so the result does not depend on the worker count.
"""
from __future__ import annotations

import os

import scipy.fft

_workers = 1


def set_threads(n: int) -> int:
    """Set FFT workers; ``0`` means one per CPU.  Returns the value in effect."""
    global _workers
    if n < 0:
        raise ValueError(f"thread count must be >= 0, got {n}")
    _workers = n if n > 0 else (os.cpu_count() or 1)
    return _workers


def get_threads() -> int:
    return _workers


def fftn(a, axes=(-3, -2, -1)):
    return scipy.fft.fftn(a, axes=axes, workers=_workers)


def ifftn(a, axes=(-3, -2, -1)):
    return scipy.fft.ifftn(a, axes=axes, workers=_workers)
