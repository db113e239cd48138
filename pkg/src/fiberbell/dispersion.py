"""Intermodal group delay of a hollow capillary and the resulting mode-order coherence

The hollow-core fiber is approximated by a dielectric capillary of core radius ``r``.
To leading order the propagation constant of a mode with eigenvalue ``u`` is
``beta = k - u**2 / (2 k r**2)``, so two modes accumulate the group-delay difference
``(u2**2 - u1**2) / (2 k**2 r**2 c)`` per meter. A superposition of the two survives
the fiber with the coherence factor given by the Fourier transform of the photon
spectrum at the total delay.

"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.special import jn_zeros

from fiberbell.verification import ParaxialValidityError

logger = logging.getLogger(__name__)

MAX_PARAXIAL_RATIO = 0.2
FUNDAMENTAL_U = float(jn_zeros(0, 1)[0])
FIRST_HIGHER_U = float(jn_zeros(1, 1)[0])
SPECTRUM_SPAN = 8.0


@dataclass(frozen=True)
class CapillaryParams:
    """Core radius and wavelength in meters, cladding index, and mode eigenvalues

    ``n_clad`` only enters the attenuation and phase corrections of the capillary modes,
    not the leading-order group delay, and is kept for completeness.

    """

    r: float
    wavelength: float
    n_clad: float = 1.45
    u1: float = FUNDAMENTAL_U
    u2: float = FIRST_HIGHER_U

    def __post_init__(self) -> None:
        if not self.r > 0 or not self.wavelength > 0:
            raise ValueError("Capillary radius and wavelength must be positive")
        if not self.n_clad > 1:
            raise ValueError(f"Cladding index must exceed one, got {self.n_clad}")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    def paraxial_ratio(self) -> float:
        """Return ``u / (k r)`` of the higher mode; the formula needs it to be small"""
        return max(self.u1, self.u2) / (self.k * self.r)


class FilterShape(Enum):
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class SpectralFilter:
    """Band-pass filter, center wavelength and full width at half maximum in meters"""

    center_wavelength: float
    fwhm: float
    shape: FilterShape = FilterShape.GAUSSIAN

    def __post_init__(self) -> None:
        if not self.fwhm > 0:
            raise ValueError(f"Filter width must be positive, got {self.fwhm}")

    @property
    def frequency_fwhm(self) -> float:
        return SPEED_OF_LIGHT * self.fwhm / self.center_wavelength ** 2

    def spectral_density(self, detuning: np.ndarray) -> np.ndarray:
        """Return the unit-area power spectrum at frequency detunings in Hz"""
        width = self.frequency_fwhm
        if self.shape is FilterShape.GAUSSIAN:
            return (
                2
                * np.sqrt(np.log(2) / np.pi)
                / width
                * np.exp(-4 * np.log(2) * (detuning / width) ** 2)
            )
        return np.where(np.abs(detuning) <= width / 2, 1 / width, 0.0)

    def coherence_time(self) -> float:
        """Return the delay where coherence drops to 1/e

        A flat-top filter has no such point, its coherence vanishes at the returned
        delay instead.

        """
        width = self.frequency_fwhm
        if self.shape is FilterShape.GAUSSIAN:
            return 2 * np.sqrt(np.log(2)) / (np.pi * width)
        return 1 / width


def capillary_intermodal_delay(params: CapillaryParams) -> float:
    """Return the group-delay difference of the two capillary modes in s/m"""
    if params.u1 <= 0 or params.u2 < params.u1:
        raise ValueError(f"Need 0 < u1 <= u2, got u1={params.u1}, u2={params.u2}")
    ratio = params.paraxial_ratio()
    if ratio > MAX_PARAXIAL_RATIO:
        raise ParaxialValidityError(
            f"u/(k r) = {ratio:.3g} exceeds {MAX_PARAXIAL_RATIO}, the capillary is too"
            " narrow for the paraxial group-delay formula"
        )
    delay = (params.u2 ** 2 - params.u1 ** 2) / (
        2 * params.k ** 2 * params.r ** 2 * SPEED_OF_LIGHT
    )
    logger.debug(
        "Capillary intermodal delay %.4g ps/m (u/kr %.3g)", delay * 1e12, ratio
    )
    return float(delay)


def effective_index_offset(params: CapillaryParams, u: float) -> float:
    """Return ``n_eff - 1`` of a capillary mode to leading order"""
    return float(-(u ** 2) / (2 * params.k ** 2 * params.r ** 2))


def coherence_factor(
    delay_per_m: float, length_m: float, spectral_filter: SpectralFilter
) -> float:
    """Return ``|∫ S(nu) exp(2 pi i nu tau) dnu|`` at the total delay ``tau``"""
    tau = abs(delay_per_m * length_m)
    if tau == 0:
        return 1.0
    width = spectral_filter.frequency_fwhm
    half_span = SPECTRUM_SPAN * width
    if spectral_filter.shape is FilterShape.RECTANGULAR:
        half_span = width / 2
    # the unit-area spectra are even, so only the cosine transform survives
    value, error = integrate.quad(
        spectral_filter.spectral_density,
        -half_span,
        half_span,
        weight="cos",
        wvar=2 * np.pi * tau,
        limit=200,
    )
    logger.debug(
        "Coherence factor %.6f ± %.2g at delay %.4g ps", value, error, tau * 1e12
    )
    return float(min(max(abs(value), 0.0), 1.0))
