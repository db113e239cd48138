"""Helper functions and closed-form oracles for unit tests"""

import math
from contextlib import nullcontext
from typing import Any, ContextManager

import numpy as np
import pytest
from scipy.special import erf


def raises_if_exception(expect: Any) -> ContextManager[Any]:
    """Return a ``pytest.raises`` context manager only if expecting an exception

    If the expected value is not an exception, return a dummy context manager.

    """
    if isinstance(expect, type) and issubclass(expect, BaseException):
        return pytest.raises(expect)
    else:
        return nullcontext()


def offset_plate_fundamental(delta: float, w0: float) -> float:
    """Overlap of a Gaussian with itself behind a plate whose edge is offset by delta"""
    return float(erf(np.sqrt(2) * delta / w0))


def offset_plate_first_order(delta: float, w0: float) -> float:
    """First-order amplitude along the edge normal behind an offset plate"""
    return float(-np.sqrt(2 / np.pi) * np.exp(-2 * delta ** 2 / w0 ** 2))


def displaced_gaussian(order: int, delta: float, w0: float) -> float:
    """Amplitude of ``HG_m0`` in a Gaussian displaced by ``delta`` along x"""
    alpha = delta / w0
    return float(
        np.exp(-(alpha ** 2) / 2) * alpha ** order / np.sqrt(math.factorial(order))
    )


def gaussian_coherence(frequency_fwhm: float, delay: float) -> float:
    """Coherence factor of a Gaussian spectrum at a delay"""
    return float(np.exp(-((np.pi * frequency_fwhm * delay) ** 2) / (4 * np.log(2))))
