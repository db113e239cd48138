"""Unit tests for :mod:`fiberbell.calibration`"""

import logging
import random
from dataclasses import replace

import numpy as np
import pytest

from fiberbell.analyzer import AnalyzerSetting
from fiberbell.calibration import (
    FitParameter,
    FitProblem,
    ForwardModel,
    channel_with,
    default_parameter,
    fit_channel,
)
from fiberbell.measurement import DetectionConfig, fringe_scan
from fiberbell.modes import FIRST_ORDER_BASIS, mode_basis
from fiberbell.state import FiberChannel, apply_channel_arm_a, uniform_spdc_state
from fiberbell.tests.conftest import FAST_QUADRATURE, GEOM
from fiberbell.tests.helpers import raises_if_exception
from fiberbell.verification import DimensionMismatchError

PHI = np.radians(np.arange(0.0, 180.0, 15.0))
BETAS_DEG = (0.0, 45.0, 90.0, -45.0)
BRIGHT = DetectionConfig(
    pair_rate=1e11, integration_time=10.0, singles_rates=(0.0, 0.0)
)
STATE = uniform_spdc_state(FIRST_ORDER_BASIS)
IDEAL = FiberChannel.ideal(FIRST_ORDER_BASIS)


def _observations(channel, detection=BRIGHT, noiseless=True):
    rho = apply_channel_arm_a(STATE, channel)
    records = []
    for index, beta in enumerate(BETAS_DEG):
        records.extend(
            fringe_scan(
                rho,
                AnalyzerSetting(np.radians(beta), geom=GEOM),
                PHI,
                detection=detection,
                noiseless=noiseless,
                stream=(index,),
                quadrature=FAST_QUADRATURE,
            )
        )
    return records


def _problem(observations, names, detection=BRIGHT, channel=IDEAL):
    return FitProblem(
        observations,
        [default_parameter(name) for name in names],
        STATE,
        channel,
        detection,
        FAST_QUADRATURE,
    )


TRUTH = IDEAL.with_values(theta_rot=np.radians(5.0), mix=0.1)
TRUTH_OBSERVATIONS = _observations(TRUTH)


def test_noiseless_round_trip():
    problem = _problem(TRUTH_OBSERVATIONS, ["theta_rot", "mix"])

    result = fit_channel(problem)

    assert result.estimates["theta_rot"] == pytest.approx(5.0, abs=1e-4)
    assert result.estimates["mix"] == pytest.approx(0.1, abs=1e-4)
    assert result.residual < 1e-6
    assert result.converged
    assert result.identifiable
    assert result.messages == []


def test_residual_at_truth_is_rounding_only():
    model = ForwardModel(_problem(TRUTH_OBSERVATIONS, ["theta_rot", "mix"]))

    result = np.sum(model.residuals(np.array([5.0, 0.1])) ** 2)

    assert result < 1e-6


def test_rotation_is_reported_within_half_turn():
    """A rotation of 95 degrees can't be told apart from one of -85 degrees"""
    observations = _observations(IDEAL.with_values(theta_rot=np.radians(95.0)))
    problem = FitProblem(
        observations,
        [FitParameter("theta_rot", -180.0, 180.0)],
        STATE,
        IDEAL,
        BRIGHT,
        FAST_QUADRATURE,
    )

    result = fit_channel(problem)

    assert result.estimates["theta_rot"] == pytest.approx(-85.0, abs=1e-4)


def test_reordered_and_duplicated_observations():
    shuffled = list(TRUTH_OBSERVATIONS)
    random.Random(4).shuffle(shuffled)

    reordered = fit_channel(_problem(shuffled, ["theta_rot", "mix"]))
    duplicated = fit_channel(_problem(TRUTH_OBSERVATIONS * 2, ["theta_rot", "mix"]))

    for result in reordered, duplicated:
        assert result.estimates["theta_rot"] == pytest.approx(5.0, abs=1e-4)
        assert result.estimates["mix"] == pytest.approx(0.1, abs=1e-4)


def test_explicit_starting_points():
    problem = _problem(TRUTH_OBSERVATIONS, ["theta_rot", "mix"])

    result = fit_channel(problem, starts=np.array([[0.0, 0.5]]))

    assert result.estimates["theta_rot"] == pytest.approx(5.0, abs=1e-4)


def test_gamma_is_not_identifiable_from_centered_fringes(caplog):
    caplog.set_level(logging.WARNING, logger="fiberbell.calibration")
    problem = _problem(
        TRUTH_OBSERVATIONS, ["theta_rot", "gamma"], channel=IDEAL.with_values(mix=0.1)
    )

    result = fit_channel(problem)

    assert not result.identifiable
    assert any("identifiable" in message for message in result.messages)
    assert "aren't all identifiable" in caplog.text
    assert result.estimates["theta_rot"] == pytest.approx(5.0, abs=1e-3)


@pytest.mark.slow
def test_noisy_fit_standard_errors_cover_truth():
    """At least 90 of 100 noisy fits land within three standard errors"""
    truth_values = {"theta_rot": 5.0, "mix": 0.3}
    truth = IDEAL.with_values(theta_rot=np.radians(5.0), mix=0.3)
    covered = dict.fromkeys(truth_values, 0)
    for seed in range(100):
        detection = DetectionConfig(pair_rate=8000.0, rng_seed=seed)
        observations = _observations(truth, detection, noiseless=False)

        result = fit_channel(_problem(observations, list(truth_values), detection))

        for name, value in truth_values.items():
            error = result.standard_errors[name]
            if abs(result.estimates[name] - value) < 3 * error:
                covered[name] += 1

    assert covered["theta_rot"] >= 90
    assert covered["mix"] >= 90


def test_channel_with():
    channel = FiberChannel.per_order(FIRST_ORDER_BASIS, 0.9)

    values = {"theta_rot": 90.0, "mix_axis": 45.0, "t1": 0.5, "mix": 0.2}

    result = channel_with(channel, values)

    assert result.theta_rot == pytest.approx(np.pi / 2)
    assert result.mix_axis == pytest.approx(np.pi / 4)
    assert result.t == (1.0, 0.5, 0.5)
    assert result.mix == 0.2


def test_fit_result_as_dict():
    result = fit_channel(_problem(TRUTH_OBSERVATIONS, ["theta_rot", "mix"]))

    data = result.as_dict()

    assert set(data) == {
        "estimates",
        "standard_errors",
        "residual",
        "covariance_estimate",
        "iterations",
        "converged",
        "identifiable",
    }
    assert np.shape(data["covariance_estimate"]) == (2, 2)
    assert list(data["standard_errors"]) == ["theta_rot", "mix"]


@pytest.mark.parametrize(
    "name, lower, upper, expect",
    [
        ("mix", 0.0, 1.0, None),
        ("length", 0.0, 1.0, ValueError),
        ("mix", 1.0, 1.0, ValueError),
    ],
)
def test_fit_parameter_validation(name, lower, upper, expect):
    with raises_if_exception(expect):

        FitParameter(name, lower, upper)


@pytest.mark.parametrize(
    "names, observations, expect",
    [
        (["theta_rot"], TRUTH_OBSERVATIONS, None),
        ([], TRUTH_OBSERVATIONS, ValueError),
        (["mix", "mix"], TRUTH_OBSERVATIONS, ValueError),
        (["theta_rot", "mix"], TRUTH_OBSERVATIONS[:3], ValueError),
        (
            ["theta_rot"],
            [replace(record, setting_a=None) for record in TRUTH_OBSERVATIONS],
            ValueError,
        ),
    ],
)
def test_fit_problem_validation(names, observations, expect):
    with raises_if_exception(expect):

        _problem(observations, names)


def test_fit_problem_basis_mismatch():
    with pytest.raises(DimensionMismatchError):
        FitProblem(
            TRUTH_OBSERVATIONS,
            [default_parameter("mix")],
            STATE,
            FiberChannel.ideal(mode_basis(2)),
        )
