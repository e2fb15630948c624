"""
Test file for the channel module.
"""

###########
# Imports #
###########

# Python imports #

import sys
sys.path.append(".")

# Dependencies #

import numpy as np
import pytest

# Local imports #

# Import objects to test
from sinr_velocity._common import ParameterError, ModelError, make_rng
from sinr_velocity.channel import (
    ChannelParams,
    TransmitterState,
    path_loss,
    sample_fading,
    interference,
    interference_from_arrays,
    sinr,
    no_interference_success_probability
)

from sinr_velocity.analysis import campbell_l_integral, truncation_error

# Import test tools
from tests._common import check_value

#########
# Tests #
#########

def test_path_loss_bounded():
    assert path_loss(0.5, 4.) == 1.
    assert path_loss(1., 4.) == 1.
    check_value(1 / 16, path_loss(2., 4.))
    losses = path_loss(np.array([0.1, 10.]), 3.)
    check_value(1e-3, losses[1])
    assert losses[0] == 1.

def test_path_loss_rejects_zero_distance():
    with pytest.raises(ParameterError):
        path_loss(0., 4.)

def test_channel_params_ranges():
    with pytest.raises(ParameterError):
        ChannelParams(alpha=2.)
    with pytest.raises(ParameterError):
        ChannelParams(gamma=1.)
    with pytest.raises(ParameterError):
        ChannelParams(noise=0.)
    assert ChannelParams(beta=0.).beta_gamma == 0.

def test_sample_fading_mean():
    fades = sample_fading(2., make_rng(0), 100000)
    check_value(0.5, np.mean(fades), 0.02)

def test_interference_excludes_positions():
    receiver = np.zeros(2)
    transmitters = [
        TransmitterState(np.array([2., 0.]), 3., True),
        TransmitterState(np.array([0., 0.5]), 1., True),
        TransmitterState(np.array([-2., 0.]), 5., False),
        TransmitterState(np.array([1., 0.]), 7., True)
    ]
    fades = np.array([1., 2., 1., 1.])
    value = interference(receiver, transmitters, [np.array([1., 0.]), receiver], fades, 4.)
    check_value(3 / 16 + 2., value)

def test_interference_from_arrays():
    distances = np.array([2., 0.5, 3.])
    powers = np.array([3., 1., 4.])
    on = np.array([True, True, False])
    fades = np.array([1., 2., 1.])
    check_value(3 / 16 + 2., interference_from_arrays(distances, powers, on, fades, 4.))
    assert interference_from_arrays(distances, powers, np.zeros(3, dtype=bool), fades, 4.) == 0.

    # One row per slot, silent nodes of empty cones carry an infinite power
    powers_block = np.array([[3., 1., np.inf], [3., 1., 4.]])
    on_block = np.array([[True, True, False], [False, True, True]])
    fades_block = np.array([[1., 2., 1.], [1., 1., 2.]])
    block = interference_from_arrays(distances, powers_block, on_block, fades_block, 4.)
    assert block.shape == (2,)
    for slot in range(2):
        check_value(interference_from_arrays(distances, powers_block[slot], on_block[slot], fades_block[slot], 4.),
                    block[slot], 1e-12)
    assert np.all(interference_from_arrays(np.empty(0), np.empty((4, 0)), np.empty((4, 0), dtype=bool),
                                           np.empty((4, 0)), 4.) == 0.)

def test_transmitting_node_needs_power():
    with pytest.raises(ParameterError):
        TransmitterState(np.zeros(2), 0., True)

def test_sinr_value():
    check_value(2 * 1.5 * 0.25 / (0.5 * 2. + 0.1), sinr(2., 1.5, 0.25, 2., 0.5, 0.1))

def test_sinr_zero_denominator():
    with pytest.raises(ModelError):
        sinr(1., 1., 1., 0., 0.5, 0.)

def test_no_interference_success_probability():
    channel = ChannelParams()
    c = 1 / 0.9
    check_value(np.exp(-0.5 * 0.1 / c), no_interference_success_probability(c, channel), 1e-9)

def test_success_frequency_without_interference():
    channel = ChannelParams()
    rng = make_rng(1)
    fades = sample_fading(channel.mu, rng, 200000)
    values = sinr(2., fades, 0.5, 0., channel.gamma, channel.noise)
    frequency = np.mean(values > channel.beta)
    check_value(no_interference_success_probability(1., channel), frequency, 0.01)

def test_interference_mean_matches_campbell():
    # ALOHA interferers with P = 1 and p = 0.5 in a disk of radius 20 around the receiver
    rng = make_rng(21)
    radius = 20.
    alpha = 4.
    nb_samples = 10000
    samples = np.empty(nb_samples)
    for sample in range(nb_samples):
        nb_points = rng.poisson(np.pi * radius ** 2)
        distances = radius * np.sqrt(rng.random(nb_points))
        on = rng.random(nb_points) < 0.5
        fades = sample_fading(1., rng, nb_points)
        samples[sample] = interference_from_arrays(distances, np.ones(nb_points), on, fades, alpha)

    expected = 0.5 * campbell_l_integral(alpha) - truncation_error(1., 0.5, 1., alpha, radius)
    check_value(expected, np.mean(samples), 0.025)

def test_interference_is_additive():
    rng = make_rng(22)
    distances = rng.uniform(0.5, 10., 40)
    powers = rng.uniform(1., 3., 40)
    on = rng.random(40) < 0.5
    fades = sample_fading(1., rng, 40)
    total = interference_from_arrays(distances, powers, on, fades, 4.)
    parts = (interference_from_arrays(distances[:15], powers[:15], on[:15], fades[:15], 4.)
             + interference_from_arrays(distances[15:], powers[15:], on[15:], fades[15:], 4.))
    check_value(total, parts, 1e-12)
