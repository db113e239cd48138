"""Unit tests for :mod:`fiberbell.state`"""

import numpy as np
import pytest

from fiberbell.modes import FIRST_ORDER_BASIS, HG00, HG01, HG10, mode_basis
from fiberbell.state import (
    Arm,
    DensityOperator,
    FiberChannel,
    TwoPhotonState,
    apply_channel_arm_a,
    order_coherence,
    partial_trace,
    product_state,
    purity,
    reduced_eigenvalues,
    spdc_state,
    transport_arm_a,
    uniform_spdc_state,
    werner_state,
)
from fiberbell.tests.helpers import raises_if_exception
from fiberbell.verification import DimensionMismatchError, ZeroStateError


def _element(rho: DensityOperator, ket, bra) -> complex:
    """Return ``<ket| rho |bra>`` for two-photon basis labels ``(mode_a, mode_b)``"""
    basis = rho.basis
    index = [basis.index(idx) for idx in (*ket, *bra)]
    return rho.tensor()[tuple(index)]


def _random_state(rng: np.random.Generator, basis) -> TwoPhotonState:
    dim = len(basis)
    coeffs = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return TwoPhotonState(basis, coeffs / np.linalg.norm(coeffs))


def test_spdc_state_is_normalized():
    state = spdc_state([(HG00, 2.0), (HG10, 1.0), (HG01, 1j)])

    assert np.sum(np.abs(state.coeffs) ** 2) == pytest.approx(1.0)
    assert state.coeffs[0, 0] == pytest.approx(2 / np.sqrt(6))
    assert state.coeffs[2, 2] == pytest.approx(1j / np.sqrt(6))


def test_spdc_state_all_zero():
    with pytest.raises(ZeroStateError):
        spdc_state([(HG00, 0.0), (HG10, 0.0)])


@pytest.mark.parametrize(
    "coeffs, expect",
    [
        (np.eye(3) / np.sqrt(3), None),
        (np.eye(3), ValueError),
        (np.ones((2, 2)) / 2, DimensionMismatchError),
    ],
)
def test_two_photon_state_validation(coeffs, expect):
    with raises_if_exception(expect):

        TwoPhotonState(FIRST_ORDER_BASIS, coeffs)


def test_product_state():
    state = product_state(FIRST_ORDER_BASIS, HG10, HG01)

    assert state.coeffs[1, 2] == 1
    assert np.count_nonzero(state.coeffs) == 1


@pytest.mark.parametrize(
    "kwargs, expect",
    [
        (dict(t=(1.0, 1.0, 1.0)), None),
        (dict(t=(1.0, 1.0)), DimensionMismatchError),
        (dict(t=(1.0, 1.1, 1.0)), ValueError),
        (dict(t=(1.0, 0.0, 1.0)), ValueError),
        (dict(t=(1.0, 1.0, 1.0), mix=1.5), ValueError),
        (dict(t=(1.0, 1.0, 1.0), gamma=-0.1), ValueError),
    ],
)
def test_fiber_channel_validation(kwargs, expect):
    with raises_if_exception(expect):

        FiberChannel(FIRST_ORDER_BASIS, **kwargs)


def test_ideal_channel_is_identity(uniform_state):
    rho = apply_channel_arm_a(uniform_state, FiberChannel.ideal(FIRST_ORDER_BASIS))

    np.testing.assert_allclose(rho.rho, uniform_state.density().rho, atol=1e-15)
    assert rho.trace == pytest.approx(1.0)


def test_per_order_loss_trace(uniform_state):
    channel = FiberChannel.per_order(FIRST_ORDER_BASIS, 0.92)

    rho = apply_channel_arm_a(uniform_state, channel)

    assert channel.t == pytest.approx((1.0, np.sqrt(0.92), np.sqrt(0.92)))
    assert rho.trace == pytest.approx(0.946667, abs=1e-6)


def test_rotations_compose(uniform_state):
    """Rotating by two angles in sequence equals a single rotation by their sum"""
    channel = FiberChannel.ideal(FIRST_ORDER_BASIS)
    first = apply_channel_arm_a(uniform_state, channel.with_values(theta_rot=0.3))

    twice = transport_arm_a(first, channel.with_values(theta_rot=0.5))

    once = apply_channel_arm_a(uniform_state, channel.with_values(theta_rot=0.8))
    np.testing.assert_allclose(twice.rho, once.rho, atol=1e-14)


def test_rotation_moves_degenerate_population():
    state = product_state(FIRST_ORDER_BASIS, HG10, HG10)
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, theta_rot=np.pi / 6)

    rho = apply_channel_arm_a(state, channel)

    assert _element(rho, (HG10, HG10), (HG10, HG10)).real == pytest.approx(0.75)
    assert _element(rho, (HG01, HG10), (HG01, HG10)).real == pytest.approx(0.25)


def test_gamma_scales_order_coherences(uniform_state):
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, gamma=0.87)

    rho = apply_channel_arm_a(uniform_state, channel)

    assert _element(rho, (HG00, HG00), (HG10, HG10)) == pytest.approx(0.87 / 3)
    assert _element(rho, (HG10, HG10), (HG01, HG01)) == pytest.approx(1 / 3)
    assert _element(rho, (HG00, HG00), (HG00, HG00)) == pytest.approx(1 / 3)


def test_mix_dephases_degenerate_pair(uniform_state):
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, mix=0.58)

    rho = apply_channel_arm_a(uniform_state, channel)

    assert _element(rho, (HG10, HG10), (HG01, HG01)) == pytest.approx(0.42 / 3)
    assert _element(rho, (HG00, HG00), (HG01, HG01)) == pytest.approx(0.42 / 3)
    assert _element(rho, (HG00, HG00), (HG10, HG10)) == pytest.approx(1 / 3)
    assert _element(rho, (HG10, HG10), (HG10, HG10)) == pytest.approx(1 / 3)
    assert rho.trace == pytest.approx(1.0)


def test_mix_axis_at_45_degrees():
    """Mixing along diagonal axes keeps arm A maximally mixed within the pair"""
    state = spdc_state([(HG00, 0.0), (HG10, 1.0), (HG01, 1.0)])
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, mix=1.0, mix_axis=np.pi / 4)

    rho = apply_channel_arm_a(state, channel)

    assert rho.trace == pytest.approx(1.0)
    assert purity(partial_trace(rho, Arm.A)) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "mix_axis, expect",
    [(0.0, 0.5), (np.pi / 2, 0.5 * (1 - 0.58)), (np.pi / 4, 0.5 * (1 - 0.58 / 2))],
)
def test_mix_keeps_fast_axis_coherent_with_fundamental(mix_axis, expect):
    """Mixing acts within the degenerate pair, not between mode orders"""
    state = spdc_state([(HG00, 1.0), (HG10, 1.0), (HG01, 0.0)])
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, mix=0.58, mix_axis=mix_axis)

    rho = apply_channel_arm_a(state, channel)

    assert _element(rho, (HG00, HG00), (HG10, HG10)) == pytest.approx(expect)
    assert _element(rho, (HG00, HG00), (HG00, HG00)) == pytest.approx(0.5)
    assert rho.trace == pytest.approx(1.0)


@pytest.mark.parametrize("mix_axis", [0.0, 0.3, np.pi / 4])
def test_full_mix_removes_coherence_between_axes(mix_axis):
    state = spdc_state([(HG00, 0.0), (HG10, 1.0), (HG01, 1.0)])
    channel = FiberChannel(FIRST_ORDER_BASIS, (1.0,) * 3, mix=1.0, mix_axis=mix_axis)
    cos_m, sin_m = np.cos(mix_axis), np.sin(mix_axis)
    fast = np.array([0.0, cos_m, sin_m])
    slow = np.array([0.0, -sin_m, cos_m])

    rho = apply_channel_arm_a(state, channel)

    single_arm = partial_trace(rho, Arm.A)
    assert fast @ single_arm @ slow == pytest.approx(0.0, abs=1e-15)
    tensor = rho.tensor()
    coherence = np.einsum("a,abcd,c->bd", fast, tensor, slow)
    np.testing.assert_allclose(coherence, 0.0, atol=1e-15)


def test_rotation_needs_degenerate_pair():
    basis = (HG00, HG10)
    state = uniform_spdc_state(basis)

    with pytest.raises(DimensionMismatchError):
        apply_channel_arm_a(state, FiberChannel(basis, (1.0, 1.0), theta_rot=0.1))


def test_channel_basis_must_match_state(uniform_state):
    with pytest.raises(DimensionMismatchError):
        apply_channel_arm_a(uniform_state, FiberChannel.ideal(mode_basis(2)))


def test_random_states_and_channels_stay_valid():
    rng = np.random.default_rng(2024)
    basis = mode_basis(2)

    for _ in range(1000):
        channel = FiberChannel(
            basis,
            tuple(rng.uniform(1e-3, 1.0, len(basis))),
            theta_rot=rng.uniform(-np.pi, np.pi),
            mix=rng.uniform(),
            gamma=rng.uniform(),
            mix_axis=rng.uniform(0, np.pi),
        )

        rho = apply_channel_arm_a(_random_state(rng, basis), channel)

        rho.verify()
        assert 0 < rho.trace <= 1 + 1e-12
        np.testing.assert_allclose(rho.rho, rho.rho.conj().T, atol=1e-10)
        assert np.linalg.eigvalsh(rho.rho).min() >= -1e-10


@pytest.mark.parametrize("theta_rot, mix, gamma", [(0.3, 0.0, 1.0), (1.1, 0.6, 0.4)])
def test_arm_b_unaffected(uniform_state, theta_rot, mix, gamma):
    """A lossless fiber on arm A leaves the reduced state of arm B unchanged"""
    channel = FiberChannel(
        FIRST_ORDER_BASIS, (1.0,) * 3, theta_rot=theta_rot, mix=mix, gamma=gamma
    )

    rho = apply_channel_arm_a(uniform_state, channel)

    np.testing.assert_allclose(partial_trace(rho, Arm.B), np.eye(3) / 3, atol=1e-14)


def test_partial_trace_and_purity(ideal_rho):
    single_arm = partial_trace(ideal_rho, Arm.A)

    np.testing.assert_allclose(single_arm, np.eye(3) / 3, atol=1e-15)
    assert purity(single_arm) == pytest.approx(1 / 3)
    np.testing.assert_allclose(reduced_eigenvalues(ideal_rho, Arm.B), [1 / 3] * 3)


def test_product_state_is_pure_per_arm():
    rho = product_state(FIRST_ORDER_BASIS, HG00, HG10).density()

    assert purity(partial_trace(rho, Arm.A)) == pytest.approx(1.0)
    assert purity(partial_trace(rho, Arm.B)) == pytest.approx(1.0)


def test_normalized_density_operator():
    state = uniform_spdc_state(FIRST_ORDER_BASIS)
    rho = apply_channel_arm_a(state, FiberChannel.per_order(FIRST_ORDER_BASIS, 0.5))

    assert rho.normalized().trace == pytest.approx(1.0)


@pytest.mark.parametrize(
    "gamma, expect",
    [
        (1.0, np.ones((3, 3))),
        (0.5, [[1, 0.5, 0.5], [0.5, 1, 1], [0.5, 1, 1]]),
        (0.0, [[1, 0, 0], [0, 1, 1], [0, 1, 1]]),
    ],
)
def test_order_coherence(gamma, expect):
    np.testing.assert_allclose(order_coherence(FIRST_ORDER_BASIS, gamma), expect)


def test_order_coherence_quadratic_in_order_difference():
    result = order_coherence(mode_basis(2, ladder=True), 0.5)

    assert result[0, 3] == pytest.approx(0.5 ** 4)


def test_werner_state():
    state = spdc_state([(HG00, 0.0), (HG10, 1.0), (HG01, 1.0)])

    rho = werner_state(state, 0.8)

    assert rho.trace == pytest.approx(1.0)
    rho.verify()
    assert _element(rho, (HG10, HG10), (HG01, HG01)) == pytest.approx(0.4)
    assert _element(rho, (HG10, HG01), (HG10, HG01)) == pytest.approx(0.05)
    assert _element(rho, (HG00, HG00), (HG00, HG00)) == 0
