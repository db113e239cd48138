"""Two-photon states and the fiber channel acting on arm A

A :class:`TwoPhotonState` holds the coefficient matrix ``C[j, k]`` of
``|HG_j>_A |HG_k>_B``. A :class:`DensityOperator` holds ``rho`` on the bipartite space
with the composite index ``j * d + k``. After the lossy fiber the density operator is
sub-normalized, its trace being the survival probability of the pair.

The fiber acts on arm A only, in this order:

1. amplitude transmission ``t_j`` per mode,
2. rotation by ``theta_rot`` within ``span{HG10, HG01}``,
3. dephasing between mode orders, coherences between orders ``p`` and ``q`` multiplied
   by ``gamma ** ((p - q) ** 2)``,
4. dephasing of strength ``mix`` in the fiber's principal axes of the degenerate pair,
   which are rotated by ``mix_axis`` from ``(HG10, HG01)``. The state is averaged
   with its copy whose slow-axis amplitude changed sign, so coherences between the
   two axes vanish at ``mix = 1`` while the fast axis stays coherent with every other
   mode.

"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from fiberbell.modes import HG01, HG10, Basis, ModeIndex, validate_basis
from fiberbell.verification import (
    DimensionMismatchError,
    ZeroStateError,
    verify_density_operator,
    verify_same_basis,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-10


class Arm(Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Pure, normalized two-photon state on a basis shared by both arms"""

    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", validate_basis(self.basis))
        coeffs = np.asarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "coeffs", coeffs)
        dim = len(self.basis)
        if coeffs.shape != (dim, dim):
            raise DimensionMismatchError(
                f"Coefficient matrix {coeffs.shape} for a basis of {dim} modes"
            )
        norm = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm - 1) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Two-photon state not normalized (norm² {norm})")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def density(self) -> "DensityOperator":
        vec = self.coeffs.ravel()
        return DensityOperator(self.basis, np.outer(vec, vec.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Possibly sub-normalized bipartite density operator"""

    basis: Basis
    rho: np.ndarray

    def __post_init__(self) -> None:
        dim = len(self.basis)
        if self.rho.shape != (dim * dim, dim * dim):
            raise DimensionMismatchError(
                f"Density operator {self.rho.shape} for a basis of {dim} modes"
            )

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def tensor(self) -> np.ndarray:
        """Return ``rho`` indexed as ``[a, b, a', b']``"""
        dim = self.dim
        return self.rho.reshape(dim, dim, dim, dim)

    @classmethod
    def from_tensor(cls, basis: Basis, tensor: np.ndarray) -> "DensityOperator":
        dim = len(basis)
        return cls(basis, tensor.reshape(dim * dim, dim * dim))

    def normalized(self) -> "DensityOperator":
        """Renormalize to unit trace, as coincidence post-selection does"""
        return DensityOperator(self.basis, self.rho / self.trace)

    def verify(self) -> None:
        verify_density_operator(self.rho)


def spdc_state(schmidt: Sequence[Tuple[ModeIndex, complex]]) -> TwoPhotonState:
    """Build the normalized Schmidt-form state ``sum_j l_j |HG_j>_A |HG_j>_B``"""
    basis = validate_basis([idx for idx, _ in schmidt])
    weights = np.array([complex(weight) for _, weight in schmidt])
    norm = np.sqrt(np.sum(np.abs(weights) ** 2))
    if norm == 0:
        raise ZeroStateError("Schmidt coefficients are all zero")
    return TwoPhotonState(basis, np.diag(weights / norm))


def uniform_spdc_state(basis: Sequence[ModeIndex]) -> TwoPhotonState:
    return spdc_state([(idx, 1.0) for idx in basis])


def product_state(
    basis: Sequence[ModeIndex], a: ModeIndex, b: ModeIndex
) -> TwoPhotonState:
    basis = validate_basis(basis)
    coeffs = np.zeros((len(basis), len(basis)), dtype=complex)
    coeffs[basis.index(a), basis.index(b)] = 1
    return TwoPhotonState(basis, coeffs)


@dataclass(frozen=True)
class FiberChannel:
    """Parameters of the fiber transporting photon A

    :param basis: Mode basis the per-mode transmissions refer to
    :param t: Amplitude transmission per basis mode, each in (0, 1]
    :param theta_rot: Rotation angle (radians) within ``span{HG10, HG01}``
    :param mix: Strength of the incoherent mixing in the degenerate pair, in [0, 1]
    :param gamma: Coherence factor between mode orders 0 and 1, in [0, 1]
    :param mix_axis: Angle (radians) of the fiber's principal axes for the mixing
    :param length_m: Fiber length in meters

    """

    basis: Basis
    t: Tuple[float, ...]
    theta_rot: float = 0.0
    mix: float = 0.0
    gamma: float = 1.0
    mix_axis: float = 0.0
    length_m: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis", validate_basis(self.basis))
        object.__setattr__(self, "t", tuple(float(value) for value in self.t))
        if len(self.t) != len(self.basis):
            raise DimensionMismatchError(
                f"{len(self.t)} transmissions for a basis of {len(self.basis)} modes"
            )
        if not all(0 < value <= 1 for value in self.t):
            raise ValueError(f"Transmissions must lie in (0, 1], got {self.t}")
        for name in ("mix", "gamma"):
            if not 0 <= getattr(self, name) <= 1:
                value = getattr(self, name)
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def ideal(cls, basis: Sequence[ModeIndex]) -> "FiberChannel":
        basis = validate_basis(basis)
        return cls(basis, (1.0,) * len(basis))

    @classmethod
    def per_order(
        cls,
        basis: Sequence[ModeIndex],
        order_power_loss: float = 1.0,
        **kwargs: float,
    ) -> "FiberChannel":
        """Build a channel whose power transmission is ``order_power_loss ** order``"""
        basis = validate_basis(basis)
        t = tuple(float(np.sqrt(order_power_loss ** idx.order)) for idx in basis)
        return cls(basis, t, **kwargs)

    def with_values(self, **values: float) -> "FiberChannel":
        return replace(self, **values)

    def order_independent(self) -> "FiberChannel":
        """Drop the mode-dependent attenuation and the dephasing between mode orders"""
        return replace(self, t=(1.0,) * len(self.basis), gamma=1.0)


def _degenerate_indices(basis: Basis) -> Optional[Tuple[int, int]]:
    if HG10 in basis and HG01 in basis:
        return basis.index(HG10), basis.index(HG01)
    return None


def order_coherence(basis: Basis, gamma: float) -> np.ndarray:
    """Return the coherence factors ``gamma ** ((p - q) ** 2)`` between mode orders"""
    orders = np.array([idx.order for idx in basis])
    exponents = (orders[:, None] - orders[None, :]) ** 2
    if gamma == 0:
        return (exponents == 0).astype(float)
    return gamma ** exponents


def _arm_a_operator(channel: FiberChannel) -> np.ndarray:
    operator = np.diag(np.array(channel.t, dtype=complex))
    pair = _degenerate_indices(channel.basis)
    if pair is not None:
        i10, i01 = pair
        rotation = np.eye(len(channel.basis), dtype=complex)
        cos_r, sin_r = np.cos(channel.theta_rot), np.sin(channel.theta_rot)
        rotation[i10, i10], rotation[i10, i01] = cos_r, -sin_r
        rotation[i01, i10], rotation[i01, i01] = sin_r, cos_r
        operator = rotation @ operator
    return operator


def _slow_axis_reflection(channel: FiberChannel) -> np.ndarray:
    """Return the operator flipping the sign of the slow-axis amplitude of the pair

    The fast axis lies at ``mix_axis`` from ``HG10`` and the slow axis perpendicular
    to it within ``span{HG10, HG01}``. Every other mode is left alone.

    """
    dim = len(channel.basis)
    pair = _degenerate_indices(channel.basis)
    assert pair is not None
    i10, i01 = pair
    slow = np.zeros(dim, dtype=complex)
    slow[i10], slow[i01] = -np.sin(channel.mix_axis), np.cos(channel.mix_axis)
    return np.eye(dim, dtype=complex) - 2 * np.outer(slow, slow.conj())


def apply_channel_arm_a(
    state: TwoPhotonState, channel: FiberChannel
) -> DensityOperator:
    """Transport photon A through the fiber and return the sub-normalized state"""
    return transport_arm_a(state.density(), channel)


def transport_arm_a(density: DensityOperator, channel: FiberChannel) -> DensityOperator:
    """Apply the fiber channel to arm A of a (possibly mixed) two-photon state"""
    verify_same_basis(density.basis, channel.basis)
    basis = density.basis
    if _degenerate_indices(basis) is None and (channel.theta_rot or channel.mix):
        raise DimensionMismatchError(
            "Mode rotation and mixing need both HG10 and HG01 in the basis"
        )
    operator = _arm_a_operator(channel)
    rho = np.einsum("ij,jbkd,lk->ibld", operator, density.tensor(), operator.conj())

    if channel.gamma < 1:
        rho = rho * order_coherence(basis, channel.gamma)[:, None, :, None]

    if channel.mix > 0:
        reflection = _slow_axis_reflection(channel)
        reflected = np.einsum("ij,jbkd,lk->ibld", reflection, rho, reflection.conj())
        rho = (1 - channel.mix) * rho + channel.mix * (rho + reflected) / 2

    result = DensityOperator.from_tensor(basis, rho)
    result.verify()
    logger.debug("Pair survival probability through the fiber %.6f", result.trace)
    return result


def partial_trace(rho: DensityOperator, arm: Arm) -> np.ndarray:
    """Return the single-arm density matrix, tracing out the other arm"""
    tensor = rho.tensor()
    if arm is Arm.A:
        return np.einsum("abcb->ac", tensor)
    return np.einsum("abad->bd", tensor)


def purity(single_arm: np.ndarray) -> float:
    """Return ``Tr(rho²) / Tr(rho)²`` of a single-arm density matrix"""
    trace = np.real(np.trace(single_arm))
    return float(np.real(np.trace(single_arm @ single_arm)) / trace ** 2)


def reduced_eigenvalues(rho: DensityOperator, arm: Arm) -> np.ndarray:
    """Return the ascending eigenvalues of the normalized single-arm state"""
    single_arm = partial_trace(rho, arm)
    return np.linalg.eigvalsh(single_arm / np.real(np.trace(single_arm)))


def werner_state(state: TwoPhotonState, visibility: float) -> DensityOperator:
    """Mix a pure state with white noise on the support of its Schmidt modes"""
    rho = state.density().rho
    support = np.abs(state.coeffs).sum(axis=1) > 0
    local = np.diag(support.astype(complex)) / support.sum()
    noise = np.kron(local, local)
    return DensityOperator(state.basis, visibility * rho + (1 - visibility) * noise)
