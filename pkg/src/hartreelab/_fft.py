"""Thin scipy.fft wrappers with a process-wide worker-count knob.

The worker count only affects speed: pocketfft computes each 1-D line
transform independently, so results are bitwise identical for any setting.
"""

from __future__ import annotations

import os

import scipy.fft as _sfft

_workers = min(os.cpu_count() or 1, 8)


def set_workers(n: int) -> None:
    global _workers
    _workers = max(1, int(n))


def get_workers() -> int:
    return _workers


def fftn(a, **kw):
    return _sfft.fftn(a, workers=_workers, **kw)


def ifftn(a, **kw):
    return _sfft.ifftn(a, workers=_workers, **kw)


def rfftn(a, **kw):
    return _sfft.rfftn(a, workers=_workers, **kw)


def irfftn(a, s, **kw):
    return _sfft.irfftn(a, s=s, workers=_workers, **kw)
