"""Detection arms: step phase plate followed by single-mode fiber projection

Orientation convention, looking along the beam::

          y
          ^      n = (sin phi, cos phi)   edge normal
          |     /
     -----+----/------ edge, at signed distance delta_pp along n
          |   /
          |  /   phi measured from the y-axis towards x
          | /
          +--------------> x

The plate adds a phase of pi where the signed distance along ``n`` exceeds ``delta_pp``.
With ``phi = 0`` the centered plate turns the Gaussian into an ``HG01``-like field, and
in the degenerate subspace a centered analyzer projects on
``sin(phi) |HG10> + cos(phi) |HG01>``. The detection fiber accepts a fundamental
Gaussian displaced by ``delta_smf`` along the same normal.

"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from fiberbell.modes import (
    FIRST_ORDER_BASIS,
    HG01,
    HG10,
    Basis,
    BeamGeometry,
    Field,
    ModeVector,
    QuadratureSpec,
    ScalarField,
    gaussian,
    mode_matrix,
    quadrature_grid,
    validate_basis,
)

logger = logging.getLogger(__name__)

DEGENERATE_PAIR = (HG10, HG01)
DEFAULT_GEOMETRY = BeamGeometry(0.8e-3)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Phase plate orientation (radians) and offsets (meters) of one detection arm"""

    phi: float
    delta_pp: float = 0.0
    delta_smf: float = 0.0
    geom: BeamGeometry = DEFAULT_GEOMETRY
    plate_present: bool = True

    def rotated(self, angle: float) -> "AnalyzerSetting":
        return replace(self, phi=self.phi + angle)

    def orthogonal(self) -> "AnalyzerSetting":
        """Return the setting with the plate turned by 90 degrees"""
        return self.rotated(np.pi / 2)

    @property
    def normal(self) -> np.ndarray:
        return np.array([np.sin(self.phi), np.cos(self.phi)])


def _plate_factor(
    x: np.ndarray, y: np.ndarray, phi: float, delta_pp: float
) -> np.ndarray:
    distance = x * np.sin(phi) + y * np.cos(phi)
    return np.where(distance > delta_pp, np.exp(1j * np.pi), 1.0 + 0j)


def phase_plate_apply(field: Field, phi: float, delta_pp: float) -> Field:
    """Shift the phase by pi beyond the plate edge; sampled fields stay on their grid"""
    if isinstance(field, ScalarField):
        x, y = field.grid.lab_points()
        return ScalarField(
            field.grid, field.values * _plate_factor(x, y, phi, delta_pp), field.geom
        )

    def plated(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return field(x, y) * _plate_factor(x, y, phi, delta_pp)

    return plated


def _wrapped_phi(phi: float) -> float:
    return float(np.mod(phi, 2 * np.pi))


@lru_cache(maxsize=8192)
def _analyzer_amplitudes(
    setting: AnalyzerSetting, basis: Basis, quadrature: QuadratureSpec
) -> np.ndarray:
    phi = _wrapped_phi(setting.phi)
    split = setting.delta_pp if setting.plate_present else None
    grid = quadrature_grid(setting.geom, quadrature, phi, split)
    shift = setting.delta_smf * np.array([np.sin(phi), np.cos(phi)])
    fiber_field: Field = gaussian(setting.geom, *shift)
    if setting.plate_present:
        fiber_field = phase_plate_apply(fiber_field, phi, setting.delta_pp)
    x, y = grid.lab_points()
    values = fiber_field(x, y)  # type: ignore[operator]
    samples = np.asarray(values, dtype=complex).ravel()
    return mode_matrix(basis, setting.geom, grid) @ samples


def analyzer_vector(
    setting: AnalyzerSetting,
    basis: Sequence[object] = FIRST_ORDER_BASIS,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> ModeVector:
    """Return the coupling amplitudes ``<HG_j| plate |displaced Gaussian>``

    The amplitudes are physical coupling efficiencies, so the vector norm is at most
    one. The quadrature grid is rotated with the plate and split at its edge.

    """
    basis = validate_basis(basis)  # type: ignore[arg-type]
    amplitudes = _analyzer_amplitudes(setting, basis, quadrature)
    return ModeVector(basis, amplitudes, setting.geom)


def degenerate_projection(vector: ModeVector) -> ModeVector:
    """Renormalize an analyzer vector within the ``{HG10, HG01}`` subspace"""
    return vector.normalized(DEGENERATE_PAIR)


def clear_cache() -> None:
    _analyzer_amplitudes.cache_clear()
