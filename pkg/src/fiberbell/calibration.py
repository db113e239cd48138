"""Least-squares estimation of fiber channel parameters from coincidence counts"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import qmc

from fiberbell.analyzer import analyzer_vector
from fiberbell.measurement import CoincidenceRecord, DetectionConfig
from fiberbell.modes import QuadratureSpec
from fiberbell.state import (
    DensityOperator,
    FiberChannel,
    TwoPhotonState,
    transport_arm_a,
)
from fiberbell.utils import wrap_degrees, wrap_symmetric
from fiberbell.verification import verify_same_basis

logger = logging.getLogger(__name__)

MULTI_START_POINTS = 5
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class FitParameter:
    """A free channel parameter with its bounds

    Angles (``theta_rot``, ``mix_axis``) are in degrees. ``t1`` is the amplitude
    transmission shared by the first-order modes.

    """

    name: str
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if self.name not in PARAMETER_NAMES:
            raise ValueError(
                f"Unknown channel parameter {self.name!r}, expected one of"
                f" {', '.join(PARAMETER_NAMES)}"
            )
        if not self.lower < self.upper:
            raise ValueError(
                f"Empty bounds [{self.lower}, {self.upper}] for {self.name}"
            )


PARAMETER_NAMES = ("theta_rot", "mix", "mix_axis", "gamma", "t1")
DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "theta_rot": (-90.0, 90.0),
    "mix": (0.0, 1.0),
    "mix_axis": (0.0, 90.0),
    "gamma": (0.0, 1.0),
    "t1": (1e-6, 1.0),
}


def default_parameter(name: str) -> FitParameter:
    return FitParameter(name, *DEFAULT_BOUNDS[name])


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Observed coincidences and the model they're compared to

    Every record needs both analyzer settings. The ``channel`` holds the values of the
    parameters which aren't fitted.

    """

    observations: Sequence[CoincidenceRecord]
    free_params: Sequence[FitParameter]
    state: TwoPhotonState
    channel: FiberChannel
    detection: DetectionConfig = DetectionConfig()
    quadrature: QuadratureSpec = QuadratureSpec()
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.free_params:
            raise ValueError("Nothing to fit, no free parameters")
        names = [param.name for param in self.free_params]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate free parameters in {names}")
        if len(self.observations) < 2 * len(self.free_params):
            raise ValueError(
                f"{len(self.observations)} observations can't determine"
                f" {len(self.free_params)} parameters, need at least twice as many"
            )
        if any(r.setting_a is None or r.setting_b is None for r in self.observations):
            raise ValueError("Observations must carry both analyzer settings")
        verify_same_basis(self.state.basis, self.channel.basis)

    @property
    def names(self) -> List[str]:
        return [param.name for param in self.free_params]

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.array([param.lower for param in self.free_params]),
            np.array([param.upper for param in self.free_params]),
        )


@dataclass(frozen=True, eq=False)
class FitResult:
    estimates: Dict[str, float]
    residual: float
    covariance_estimate: np.ndarray
    iterations: int
    converged: bool = True
    identifiable: bool = True
    messages: List[str] = field(default_factory=list)

    @property
    def standard_errors(self) -> Dict[str, float]:
        errors = np.sqrt(np.clip(np.diag(self.covariance_estimate), 0, None))
        return dict(zip(self.estimates, errors.tolist()))

    def as_dict(self) -> Dict[str, object]:
        return {
            "estimates": self.estimates,
            "standard_errors": self.standard_errors,
            "residual": self.residual,
            "covariance_estimate": self.covariance_estimate.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "identifiable": self.identifiable,
        }


def channel_with(channel: FiberChannel, values: Mapping[str, float]) -> FiberChannel:
    """Return ``channel`` with fit parameters replaced, converting angles to radians"""
    updates: Dict[str, object] = {}
    for name, value in values.items():
        if name in ("theta_rot", "mix_axis"):
            updates[name] = float(np.radians(value))
        elif name == "t1":
            updates["t"] = tuple(
                value if idx.order == 1 else t
                for idx, t in zip(channel.basis, channel.t)
            )
        else:
            updates[name] = float(value)
    return channel.with_values(**updates)


class ForwardModel:
    """Expected coincidence counts of the observations for given channel parameters"""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        basis = problem.state.basis
        self.vectors_a = np.array(
            [
                analyzer_vector(r.setting_a, basis, problem.quadrature).amplitudes
                for r in problem.observations
                if r.setting_a is not None
            ]
        )
        self.vectors_b = np.array(
            [
                analyzer_vector(r.setting_b, basis, problem.quadrature).amplitudes
                for r in problem.observations
                if r.setting_b is not None
            ]
        )
        self.observed = np.array([r.counts for r in problem.observations], dtype=float)
        self.sigma = np.sqrt(np.maximum(self.observed, 1.0))
        self.density = problem.state.density()

    def channel(self, x: np.ndarray) -> FiberChannel:
        return channel_with(self.problem.channel, dict(zip(self.problem.names, x)))

    def transported(self, x: np.ndarray) -> DensityOperator:
        return transport_arm_a(self.density, self.channel(x))

    def expected_counts(self, x: np.ndarray) -> np.ndarray:
        tensor = self.transported(x).tensor()
        probabilities = np.einsum(
            "ia,ib,abcd,ic,id->i",
            self.vectors_a.conj(),
            self.vectors_b.conj(),
            tensor,
            self.vectors_a,
            self.vectors_b,
            optimize=True,
        )
        return self.problem.detection.expected_coincidences(np.real(probabilities))

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return (self.observed - self.expected_counts(x)) / self.sigma


def _starting_points(problem: FitProblem) -> np.ndarray:
    lower, upper = problem.bounds
    sampler = qmc.LatinHypercube(d=len(lower), seed=problem.seed)
    return qmc.scale(sampler.random(MULTI_START_POINTS), lower, upper)


def _covariance(jacobian: np.ndarray) -> Tuple[np.ndarray, bool]:
    curvature = jacobian.T @ jacobian
    if np.linalg.cond(curvature) > SINGULAR_CONDITION:
        return np.linalg.pinv(curvature), False
    return np.linalg.inv(curvature), True


def _wrap(names: Sequence[str], x: np.ndarray) -> Dict[str, float]:
    estimates = {}
    for name, value in zip(names, x):
        if name == "theta_rot":
            value = wrap_symmetric(value, 180.0)
        elif name == "mix_axis":
            value = wrap_degrees(value, 90.0)
        estimates[name] = float(value)
    return estimates


def fit_channel(problem: FitProblem, starts: Optional[np.ndarray] = None) -> FitResult:
    """Minimize the Poisson-weighted squared residuals over the free parameters

    The fit runs from each point of a Latin hypercube over the bounds, or from the
    given ``starts``, and keeps the smallest residual; ties go to the first start.
    Rotation angles are reported within ``[-90°, 90°)`` and mixing axes within
    ``[0°, 90°)``, the periods on which fringes can distinguish them.

    """
    model = ForwardModel(problem)
    lower, upper = problem.bounds
    best = None
    evaluations = 0
    for start in _starting_points(problem) if starts is None else starts:
        result = least_squares(
            model.residuals,
            np.clip(start, lower, upper),
            bounds=(lower, upper),
            method="trf",
            x_scale="jac",
            ftol=1e-9,
            xtol=1e-12,
            max_nfev=10000,
        )
        evaluations += result.nfev
        logger.debug(
            "Fit from %s reached %s with cost %.6g after %s evaluations",
            np.round(start, 4).tolist(),
            np.round(result.x, 6).tolist(),
            result.cost,
            result.nfev,
        )
        if best is None or result.cost < best.cost:
            best = result
    assert best is not None
    covariance, identifiable = _covariance(best.jac)
    messages = []
    if not best.success:
        messages.append(f"Fit didn't converge: {best.message}")
        logger.warning(messages[-1])
    if not identifiable:
        messages.append(
            f"Parameters {', '.join(problem.names)} aren't all identifiable from the"
            " observations, the covariance estimate is singular"
        )
        logger.warning(messages[-1])
    return FitResult(
        _wrap(problem.names, best.x),
        float(2 * best.cost),
        covariance,
        evaluations,
        bool(best.success),
        identifiable,
        messages,
    )
