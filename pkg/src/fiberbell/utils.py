"""Miscellaneous utility functions"""

from typing import Iterable

import numpy as np

MM = 1e-3
UM = 1e-6
NM = 1e-9
PS = 1e-12
NS = 1e-9


def wrap_degrees(angle: float, period: float = 360.0) -> float:
    """Wrap an angle in degrees into ``[0, period)``

    >>> wrap_degrees(-45.0), wrap_degrees(405.0), wrap_degrees(270.0, period=180.0)
    (315.0, 45.0, 90.0)

    """
    wrapped = float(np.mod(angle, period))
    return 0.0 if wrapped == period else wrapped


def wrap_symmetric(angle: float, period: float = 180.0) -> float:
    """Wrap an angle into ``[-period / 2, period / 2)``

    >>> wrap_symmetric(95.0), wrap_symmetric(-90.0), wrap_symmetric(30.0, period=90.0)
    (-85.0, -90.0, 30.0)

    """
    return wrap_degrees(angle + period / 2, period) - period / 2


def inclusive_range(start: float, stop: float, step: float) -> np.ndarray:
    """Return evenly spaced values from ``start`` to ``stop`` including both ends

    The number of points is rounded so that float steps don't drop the end point.

    >>> inclusive_range(0.0, 1.0, 0.25).tolist()
    [0.0, 0.25, 0.5, 0.75, 1.0]

    """
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(max(count, 1))


def make_rng(seed: int, stream: Iterable[int] = ()) -> np.random.Generator:
    """Return a counter-based generator for one stream of a seeded computation

    Streams with different keys are statistically independent, and the numbers drawn
    for a given ``(seed, stream)`` don't depend on what other streams were used before.

    """
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(key) for key in stream))
    return np.random.Generator(np.random.Philox(sequence))


def format_float(value: float) -> str:
    """Format a float for CSV output, the same way on every run

    >>> format_float(0.1 + 0.2), format_float(2.0), format_float(float("nan"))
    ('0.3', '2', 'nan')

    """
    return f"{value:.12g}"
