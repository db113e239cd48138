"""CHSH correlations, the S-parameter and its propagated uncertainty

Each correlation value ``E(a, b)`` is estimated from four coincidence counts, in the
order ``(n_ab, n_ab⊥, n_a⊥b, n_a⊥b⊥)`` where ``⊥`` is the plate turned by 90
degrees. Arrays of counts for one S-value have the shape ``(4, 4)``, one row per
correlation in the order ``E(α1, β1), E(α1, β2), E(α2, β1), E(α2, β2)``.

"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from fiberbell.analyzer import DEFAULT_GEOMETRY, AnalyzerSetting, analyzer_vector
from fiberbell.measurement import DetectionConfig, probability_matrix
from fiberbell.modes import BeamGeometry, QuadratureSpec
from fiberbell.state import DensityOperator
from fiberbell.utils import make_rng, wrap_degrees
from fiberbell.verification import ZeroTotalError

logger = logging.getLogger(__name__)

SIGNS = np.array([1.0, -1.0, -1.0, 1.0])
S_WEIGHTS = np.array([1.0, -1.0, 1.0, 1.0])
CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2 * np.sqrt(2)
COARSE_STEP_DEG = 7.5


@dataclass(frozen=True)
class ChshSettings:
    """Plate angles of the four CHSH settings, in radians"""

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"CHSH angles must be finite, got {self}")

    @classmethod
    def from_degrees(
        cls, alpha1: float, alpha2: float, beta1: float, beta2: float
    ) -> "ChshSettings":
        return cls(*np.radians([alpha1, alpha2, beta1, beta2]).tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.beta1, self.beta2])

    def degrees(self) -> Tuple[float, float, float, float]:
        alpha1, alpha2, beta1, beta2 = np.degrees(self.as_array()).tolist()
        return alpha1, alpha2, beta1, beta2


CANONICAL_SETTINGS = ChshSettings.from_degrees(0.0, 45.0, 22.5, 67.5)


@dataclass(frozen=True, eq=False)
class BellResult:
    settings: ChshSettings
    e_values: np.ndarray
    s: float
    delta_s: float
    counts: np.ndarray

    @property
    def violated(self) -> bool:
        return abs(self.s) > CLASSICAL_BOUND


def correlation_e(
    n_ab: float, n_ab_perp: float, n_aperp_b: float, n_perp_perp: float
) -> float:
    """Estimate the correlation of two analyzers from four coincidence counts

    >>> correlation_e(100, 0, 0, 100), correlation_e(0, 100, 100, 0)
    (1.0, -1.0)

    """
    total = n_ab + n_ab_perp + n_aperp_b + n_perp_perp
    if not total > 0:
        raise ZeroTotalError("Can't estimate a correlation from zero coincidences")
    return float((n_ab + n_perp_perp - n_aperp_b - n_ab_perp) / total)


def _correlations(counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    totals = counts.sum(axis=-1)
    if np.any(totals <= 0):
        raise ZeroTotalError("Some CHSH correlation has zero coincidences")
    return counts @ SIGNS / totals, totals


def s_from_e(e_values: np.ndarray) -> np.ndarray:
    """Combine correlations ``E11, E12, E21, E22`` along the last axis into ``S``"""
    return np.asarray(e_values) @ S_WEIGHTS


def delta_s(counts: np.ndarray) -> np.ndarray:
    """Propagate Poisson uncertainties ``√N`` of the 16 counts to ``S``

    ``counts`` has the shape ``(..., 4, 4)``. The derivative of ``E`` with respect to
    count ``i`` is ``(σ_i - E) / T`` where ``σ_i`` is the sign of the count in the
    estimator and ``T`` the total of the four counts.

    """
    counts = np.asarray(counts, dtype=float)
    e_values, totals = _correlations(counts)
    derivatives = (SIGNS - e_values[..., None]) / totals[..., None]
    weights = S_WEIGHTS[:, None] ** 2
    variance = np.sum(weights * derivatives ** 2 * counts, axis=(-2, -1))
    return np.sqrt(variance)


def _vectors(
    angles: Sequence[float],
    rho: DensityOperator,
    geom: BeamGeometry,
    quadrature: QuadratureSpec,
) -> np.ndarray:
    """Stack the analyzer amplitudes of each angle and its perpendicular setting"""
    rows = []
    for angle in angles:
        setting = AnalyzerSetting(float(angle), geom=geom)
        for turned in (setting, setting.orthogonal()):
            rows.append(analyzer_vector(turned, rho.basis, quadrature).amplitudes)
    return np.array(rows)


def _quadruples(
    rho: DensityOperator,
    alphas: Sequence[float],
    betas: Sequence[float],
    geom: BeamGeometry,
    quadrature: QuadratureSpec,
) -> np.ndarray:
    """Return the coincidence probabilities of every ``(alpha, beta)`` pair

    The result has the shape ``(len(alphas), len(betas), 4)`` with the four numbers of
    each pair in estimator order.

    """
    probabilities = probability_matrix(
        rho,
        _vectors(alphas, rho, geom, quadrature),
        _vectors(betas, rho, geom, quadrature),
    ).reshape(len(alphas), 2, len(betas), 2)
    return probabilities.transpose(0, 2, 1, 3).reshape(len(alphas), len(betas), 4)


def _counts(
    probabilities: np.ndarray,
    detection: DetectionConfig,
    noiseless: bool,
    stream: Sequence[int],
) -> np.ndarray:
    """Turn probabilities into counts; noiseless counts are expected pair coincidences

    Accidental coincidences are only added when drawing Poisson counts, so that the
    noiseless estimator reproduces the model correlations exactly.

    """
    if noiseless:
        return probabilities * detection.pairs
    rng = make_rng(detection.rng_seed, stream)
    return rng.poisson(detection.expected_coincidences(probabilities)).astype(float)


def s_parameter(
    rho: DensityOperator,
    settings: ChshSettings,
    noiseless: bool = True,
    detection: DetectionConfig = DetectionConfig(),
    stream: Sequence[int] = (),
    geom: BeamGeometry = DEFAULT_GEOMETRY,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> BellResult:
    """Evaluate the 16 coincidence measurements of one CHSH setting"""
    quadruples = _quadruples(
        rho,
        [settings.alpha1, settings.alpha2],
        [settings.beta1, settings.beta2],
        geom,
        quadrature,
    )
    counts = _counts(quadruples.reshape(4, 4), detection, noiseless, stream)
    e_values, _ = _correlations(counts)
    return BellResult(
        settings, e_values, float(s_from_e(e_values)), float(delta_s(counts)), counts
    )


class ScanResult(NamedTuple):
    beta1: np.ndarray
    beta2: np.ndarray
    s: np.ndarray
    delta_s: np.ndarray
    violated: np.ndarray

    def argmax(self) -> Tuple[float, float, float, float]:
        """Return ``(beta1, beta2, S, ΔS)`` at the largest S of the scan"""
        i, j = np.unravel_index(np.argmax(self.s), self.s.shape)
        return (
            float(self.beta1[i]),
            float(self.beta2[j]),
            float(self.s[i, j]),
            float(self.delta_s[i, j]),
        )


def s_scan(
    rho: DensityOperator,
    alpha1: float,
    alpha2: float,
    beta_grid: Sequence[float],
    noiseless: bool = True,
    detection: DetectionConfig = DetectionConfig(),
    stream: Sequence[int] = (),
    geom: BeamGeometry = DEFAULT_GEOMETRY,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> ScanResult:
    """Evaluate S on every ``(beta1, beta2)`` pixel of ``beta_grid × beta_grid``

    Angles are in radians. Noisy pixels draw their counts from the stream
    ``(*stream, i, j)`` so that each pixel is reproducible on its own.

    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.size == 0:
        raise ValueError("Empty grid of beta angles")
    quadruples = _quadruples(rho, [alpha1, alpha2], betas, geom, quadrature)
    size = len(betas)
    first, second = quadruples[0], quadruples[1]
    probabilities = np.stack(
        [
            np.broadcast_to(first[:, None], (size, size, 4)),
            np.broadcast_to(first[None, :], (size, size, 4)),
            np.broadcast_to(second[:, None], (size, size, 4)),
            np.broadcast_to(second[None, :], (size, size, 4)),
        ],
        axis=2,
    )
    if noiseless:
        counts = _counts(probabilities, detection, True, stream)
    else:
        counts = np.empty_like(probabilities)
        for i, j in np.ndindex(size, size):
            pixel_stream = (*stream, i, j)
            counts[i, j] = _counts(probabilities[i, j], detection, False, pixel_stream)
    e_values, _ = _correlations(counts)
    s_values = s_from_e(e_values)
    logger.debug("Scanned S on %s×%s pixels, largest %.6f", size, size, s_values.max())
    violated = s_values > CLASSICAL_BOUND
    return ScanResult(betas, betas, s_values, delta_s(counts), violated)


def _coarse_maximum(
    rho: DensityOperator, geom: BeamGeometry, quadrature: QuadratureSpec
) -> np.ndarray:
    """Brute-force all four angles over ``[0°, 180°)``

    Ties go to the smallest angles.

    """
    angles = np.radians(np.arange(0.0, 180.0, COARSE_STEP_DEG))
    quadruples = _quadruples(rho, angles, angles, geom, quadrature)
    table = quadruples @ SIGNS / quadruples.sum(axis=-1)
    s_values = (
        table[:, None, :, None]
        - table[:, None, None, :]
        + table[None, :, :, None]
        + table[None, :, None, :]
    )
    best = np.unravel_index(np.argmax(s_values), s_values.shape)
    logger.debug("Coarse CHSH maximum %.6f", s_values[best])
    return angles[list(best)]


def s_maximize(
    rho: DensityOperator,
    initial: Optional[ChshSettings] = None,
    detection: DetectionConfig = DetectionConfig(),
    geom: BeamGeometry = DEFAULT_GEOMETRY,
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> BellResult:
    """Maximize S over all four plate angles

    A brute-force search on a 7.5 degree grid seeds a Nelder-Mead polish. An
    ``initial`` setting is polished as well and the better of the two results wins. The
    returned angles are wrapped into ``[0°, 180°)``.

    """

    def negative_s(degrees: np.ndarray) -> float:
        settings = ChshSettings.from_degrees(*degrees)
        return -s_parameter(rho, settings, True, detection, (), geom, quadrature).s

    starts = [np.degrees(_coarse_maximum(rho, geom, quadrature))]
    if initial is not None:
        starts.append(np.array(initial.degrees()))
    best_angles, best_value = starts[0], np.inf
    for start in starts:
        result = minimize(
            negative_s,
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000},
        )
        logger.debug(
            "Polished CHSH angles %s to S %.9f in %s evaluations",
            np.round(result.x, 4).tolist(),
            -result.fun,
            result.nfev,
        )
        if result.fun < best_value:
            best_angles, best_value = result.x, result.fun
    wrapped = [wrap_degrees(angle, 180.0) for angle in best_angles]
    return s_parameter(
        rho,
        ChshSettings.from_degrees(*wrapped),
        True,
        detection,
        (),
        geom,
        quadrature,
    )
