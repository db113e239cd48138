"""Coincidence rates, simulated photon counts and fringe analysis"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from fiberbell.analyzer import AnalyzerSetting, analyzer_vector
from fiberbell.modes import ModeVector, QuadratureSpec
from fiberbell.state import Arm, DensityOperator, partial_trace
from fiberbell.utils import make_rng
from fiberbell.verification import NoDipFoundError, verify_same_basis

logger = logging.getLogger(__name__)

SettingPair = Tuple[Optional[AnalyzerSetting], Optional[AnalyzerSetting]]


@dataclass(frozen=True)
class DetectionConfig:
    """Pair rate at the analyzers, integration time and coincidence window in seconds

    ``singles_rates`` is the uncorrelated background count rate of detectors A and B;
    it produces the accidental coincidences.

    """

    pair_rate: float = 2000.0
    integration_time: float = 10.0
    coincidence_window: float = 2e-9
    singles_rates: Tuple[float, float] = (1e4, 1e4)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        rates = (self.pair_rate, self.integration_time, *self.singles_rates)
        if min(rates) < 0:
            raise ValueError("Rates and integration time must be non-negative")
        if not self.coincidence_window > 0:
            raise ValueError("Coincidence window must be positive")

    @property
    def pairs(self) -> float:
        return self.pair_rate * self.integration_time

    @property
    def accidentals(self) -> float:
        singles_a, singles_b = self.singles_rates
        return singles_a * singles_b * self.coincidence_window * self.integration_time

    def expected_coincidences(self, probability: np.ndarray) -> np.ndarray:
        return probability * self.pairs + self.accidentals

    def expected_singles(self, probability: np.ndarray, arm: Arm) -> np.ndarray:
        background = self.singles_rates[0 if arm is Arm.A else 1]
        return (background + self.pair_rate * probability) * self.integration_time


@dataclass(frozen=True)
class CoincidenceRecord:
    setting_a: Optional[AnalyzerSetting]
    setting_b: Optional[AnalyzerSetting]
    expected_rate: float
    counts: int
    singles_a: int = 0
    singles_b: int = 0

    def __post_init__(self) -> None:
        if self.counts < 0:
            raise ValueError(f"Negative coincidence count {self.counts}")
        if not -1e-12 <= self.expected_rate <= 1 + 1e-12:
            raise ValueError(
                f"Coincidence probability {self.expected_rate} outside [0, 1]"
            )


def probability_matrix(
    rho: DensityOperator, vectors_a: np.ndarray, vectors_b: np.ndarray
) -> np.ndarray:
    """Return ``<a_i b_j| rho |a_i b_j>`` for rows ``a_i`` and ``b_j`` of amplitudes"""
    tensor = rho.tensor()
    conditioned = np.einsum(
        "ia,abcd,ic->ibd", vectors_a.conj(), tensor, vectors_a, optimize=True
    )
    probabilities = np.einsum(
        "jb,ibd,jd->ij", vectors_b.conj(), conditioned, vectors_b, optimize=True
    )
    return np.clip(np.real(probabilities), 0.0, None)


def coincidence_probability(
    rho: DensityOperator, a: ModeVector, b: ModeVector
) -> float:
    """Return the probability ``<a b| rho |a b>`` that both analyzers click"""
    verify_same_basis(rho.basis, a.basis, b.basis)
    return float(
        probability_matrix(rho, a.amplitudes[None, :], b.amplitudes[None, :])[0, 0]
    )


def single_probability(rho: DensityOperator, vector: ModeVector, arm: Arm) -> float:
    """Return the click probability of one analyzer regardless of the other arm"""
    verify_same_basis(rho.basis, vector.basis)
    single_arm = partial_trace(rho, arm)
    amplitudes = vector.amplitudes
    return float(max(np.real(amplitudes.conj() @ single_arm @ amplitudes), 0.0))


def simulate_counts(
    probability: float,
    cfg: DetectionConfig,
    stream: Iterable[int] = (),
    single_probabilities: Tuple[float, float] = (0.0, 0.0),
    settings: SettingPair = (None, None),
    noiseless: bool = False,
) -> CoincidenceRecord:
    """Draw Poisson coincidence and singles counts for one pair of settings

    The random numbers come from the stream ``stream`` of ``cfg.rng_seed``, so a record
    is reproducible no matter in which order a scan is evaluated. With ``noiseless``
    the expected counts are rounded instead.

    """
    means = np.array(
        [
            cfg.expected_coincidences(probability),
            cfg.expected_singles(single_probabilities[0], Arm.A),
            cfg.expected_singles(single_probabilities[1], Arm.B),
        ]
    )
    if noiseless:
        counts = np.round(means).astype(int)
    else:
        counts = make_rng(cfg.rng_seed, stream).poisson(means)
    return CoincidenceRecord(
        settings[0], settings[1], float(probability), *(int(count) for count in counts)
    )


def fringe_scan(
    rho: DensityOperator,
    setting_b: AnalyzerSetting,
    phi_values: Sequence[float],
    setting_a: Optional[AnalyzerSetting] = None,
    detection: DetectionConfig = DetectionConfig(),
    noiseless: bool = False,
    stream: Sequence[int] = (),
    quadrature: QuadratureSpec = QuadratureSpec(),
) -> List[CoincidenceRecord]:
    """Rotate plate A through ``phi_values`` while analyzer B stays fixed

    :param setting_a: Template for analyzer A whose angle is replaced by each value of
                      ``phi_values``; a centered plate by default

    """
    template = setting_a or AnalyzerSetting(0.0, geom=setting_b.geom)
    b = analyzer_vector(setting_b, rho.basis, quadrature)
    p_single_b = single_probability(rho, b, Arm.B)
    records = []
    for index, phi in enumerate(phi_values):
        setting = AnalyzerSetting(
            phi,
            template.delta_pp,
            template.delta_smf,
            template.geom,
            template.plate_present,
        )
        a = analyzer_vector(setting, rho.basis, quadrature)
        records.append(
            simulate_counts(
                coincidence_probability(rho, a, b),
                detection,
                (*stream, index),
                (single_probability(rho, a, Arm.A), p_single_b),
                (setting, setting_b),
                noiseless,
            )
        )
    logger.debug("Scanned %s plate angles in arm A", len(records))
    return records


class FringeFit(NamedTuple):
    offset: float
    amplitude: float
    theta: float
    visibility: float
    residual: float


def fit_fringe(phi: Sequence[float], values: Sequence[float]) -> FringeFit:
    """Least-squares fit of ``A + B cos(2 (phi - theta))`` to a fringe

    :return: ``A``, ``B >= 0``, ``theta`` in radians, the visibility ``B / A`` and the
             root-mean-square residual relative to ``A``

    """
    phi = np.asarray(phi, dtype=float)
    values = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(phi), np.cos(2 * phi), np.sin(2 * phi)])
    (offset, cos_part, sin_part), *_ = np.linalg.lstsq(design, values, rcond=None)
    amplitude = float(np.hypot(cos_part, sin_part))
    theta = float(0.5 * np.arctan2(sin_part, cos_part))
    residual = values - design @ np.array([offset, cos_part, sin_part])
    rms = float(np.sqrt(np.mean(residual ** 2)))
    if offset == 0:
        return FringeFit(0.0, amplitude, theta, 0.0, 0.0)
    return FringeFit(
        float(offset), amplitude, theta, amplitude / float(offset), rms / abs(offset)
    )


class Dip(NamedTuple):
    position: float
    minimum: float
    left_peak: float
    right_peak: float
    visibility: float


def find_dip(
    positions: Sequence[float], values: Sequence[float], smoothing: int = 1
) -> Dip:
    """Locate the most prominent dip and its two neighbouring peaks

    The visibility is ``(MAX - MIN) / (MAX + MIN)`` where ``MAX`` is the average of the
    two peaks adjacent to the dip and ``MIN`` the value in the dip.

    :param smoothing: Width of a moving-average window applied before the search;
                      ``1`` leaves the values untouched

    """
    positions = np.asarray(positions, dtype=float)
    values = np.asarray(values, dtype=float)
    if smoothing > 1:
        values = uniform_filter1d(values, size=smoothing, mode="nearest")
    dips, properties = find_peaks(-values, prominence=0)
    peaks, _ = find_peaks(values)
    for dip in dips[np.argsort(-properties["prominences"], kind="stable")]:
        left, right = peaks[peaks < dip], peaks[peaks > dip]
        if len(left) and len(right):
            break
    else:
        raise NoDipFoundError("No local minimum with a peak on each side in the scan")
    left_peak, right_peak = values[left[-1]], values[right[0]]
    maximum = 0.5 * (left_peak + right_peak)
    minimum = values[dip]
    total = maximum + minimum
    visibility = (maximum - minimum) / total if total > 0 else 0.0
    return Dip(
        float(positions[dip]),
        float(minimum),
        float(left_peak),
        float(right_peak),
        float(visibility),
    )


def visibility(scan: Sequence[Tuple[float, float]], smoothing: int = 1) -> float:
    """Return the dip visibility of a scan given as ``(position, counts)`` pairs"""
    positions, values = zip(*scan) if scan else ((), ())
    return find_dip(positions, values, smoothing).visibility
