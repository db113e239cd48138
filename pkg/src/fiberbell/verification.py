"""Exceptions and numerical validity checks"""

from typing import Sequence

import numpy as np

HERMITICITY_TOLERANCE = 1e-10
POSITIVITY_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10


class FiberbellError(Exception):
    pass


class ConfigError(FiberbellError):
    """Invalid experiment configuration, the message names the offending key path"""


class NumericalValidityError(FiberbellError):
    pass


class GridTooCoarseError(NumericalValidityError):
    pass


class ParaxialValidityError(NumericalValidityError):
    pass


class DensityOperatorError(NumericalValidityError):
    pass


class DimensionMismatchError(NumericalValidityError):
    pass


class ZeroTotalError(NumericalValidityError):
    pass


class NoDipFoundError(NumericalValidityError):
    pass


class ZeroStateError(NumericalValidityError):
    pass


def verify_same_basis(*bases: Sequence[object]) -> None:
    """Raise :class:`DimensionMismatchError` unless all bases are identical"""
    first, *others = [tuple(basis) for basis in bases]
    for other in others:
        if other != first:
            raise DimensionMismatchError(
                f"Mode bases differ: {[str(idx) for idx in first]} vs"
                f" {[str(idx) for idx in other]}"
            )


def verify_density_operator(rho: np.ndarray) -> None:
    """Verify that ``rho`` is a valid, possibly subnormalized, density operator

    It must be Hermitian and positive semidefinite with a trace in ``(0, 1]``.

    """
    asymmetry = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if asymmetry > HERMITICITY_TOLERANCE:
        raise DensityOperatorError(f"Density operator not Hermitian ({asymmetry:.3g})")
    min_eigenvalue = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
    if min_eigenvalue < -POSITIVITY_TOLERANCE:
        raise DensityOperatorError(
            f"Density operator has a negative eigenvalue {min_eigenvalue:.3g}"
        )
    trace = float(np.real(np.trace(rho)))
    if not 0 < trace <= 1 + TRACE_TOLERANCE:
        raise DensityOperatorError(f"Density operator trace {trace} outside (0, 1]")
