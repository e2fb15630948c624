"""
Module to define the channel model: path loss, fading, interference and SINR.
"""

###########
# Imports #
###########

# Dependencies #

import numpy as np

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    GeometryError,
    ModelError,
    check_positive,
    check_open_unit_interval
)

###########
# Classes #
###########

class ChannelParams:
    """
    Parameters of the physical channel.

    Parameters
    ----------
    alpha : float
        Path loss exponent, greater than 2.
    mu : float
        Rate of the exponential fading, the mean fading power is 1 / mu.
    noise : float
        Noise power N, positive.
    gamma : float
        Interference suppression factor, in (0, 1).
    beta : float
        SINR success threshold. Zero is accepted for degenerate experiments.
    """

    alpha: float
    mu: float
    noise: float
    gamma: float
    beta: float

    def __init__(self, alpha: float = 4., mu: float = 1., noise: float = 0.1, gamma: float = 0.5, beta: float = 0.5):
        if not alpha > 2:
            raise ParameterError(
                f"The path loss exponent must be greater than 2, got {alpha}.")
        check_positive("mu", mu)
        check_positive("noise", noise)
        check_open_unit_interval("gamma", gamma)
        check_positive("beta", beta, allow_zero=True)
        self.alpha = float(alpha)
        self.mu = float(mu)
        self.noise = float(noise)
        self.gamma = float(gamma)
        self.beta = float(beta)

    @property
    def beta_gamma(self) -> float:
        return self.beta * self.gamma

class TransmitterState:
    """
    State of a node during one slot.

    Parameters
    ----------
    position : np.ndarray
        Coordinates of the node.
    power : float
        Transmit power.
    on : bool
        MAC indicator, True when the node transmits.
    """

    def __init__(self, position: np.ndarray, power: float, on: bool):
        if on and not power > 0:
            raise ParameterError(
                f"A transmitting node must have a positive power, got {power}.")
        self.position = np.asarray(position, dtype=float)
        self.power = float(power)
        self.on = bool(on)

#############
# Functions #
#############

def path_loss(r: float | np.ndarray, alpha: float) -> float | np.ndarray:
    """
    Compute the bounded path loss min(r^-alpha, 1).

    Parameters
    ----------
    r : float | np.ndarray
        Distance, positive.
    alpha : float
        Path loss exponent.

    Returns
    -------
    float | np.ndarray
        Attenuation in (0, 1].
    """

    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("The path loss is only defined for positive distances.")

    # Overflow of r^-alpha is impossible on the r > 1 branch
    with np.errstate(over="ignore"):
        loss = np.minimum(np.power(r, -alpha), 1.)

    if loss.ndim == 0:
        return float(loss)
    return loss

def sample_fading(mu: float, rng: np.random.Generator, size: int | tuple | None = None) -> float | np.ndarray:
    """
    Sample exponential fading powers of rate mu.

    Parameters
    ----------
    mu : float
        Rate of the exponential distribution.
    rng : np.random.Generator
        Random stream.
    size : int | tuple | None, optional
        Number of i.i.d. draws, by default a single draw.

    Returns
    -------
    float | np.ndarray
        Fading powers.
    """

    check_positive("mu", mu)
    return rng.exponential(1 / mu, size=size)

def interference(
        receiver: np.ndarray,
        transmitters: list[TransmitterState],
        excluded: list[np.ndarray],
        fades: np.ndarray,
        alpha: float) -> float:
    """
    Aggregate the interference of the active transmitters at the receiver.

    Parameters
    ----------
    receiver : np.ndarray
        Receiver coordinates.
    transmitters : list[TransmitterState]
        States of the potential interferers.
    excluded : list[np.ndarray]
        Positions skipped in the sum, at least the signal transmitter and the receiver.
    fades : np.ndarray
        Fading power of each transmitter towards the receiver.
    alpha : float
        Path loss exponent.

    Returns
    -------
    float
        Interference power.
    """

    receiver = np.asarray(receiver, dtype=float)
    excluded = [np.asarray(position, dtype=float) for position in excluded]
    total = 0.
    for transmitter, fade in zip(transmitters, fades):
        if not transmitter.on:
            continue
        if any(np.array_equal(transmitter.position, position) for position in excluded):
            continue
        distance = np.hypot(*(transmitter.position - receiver))
        if distance == 0:
            raise GeometryError(
                "An active transmitter coincides with the receiver.")
        total += transmitter.power * fade * path_loss(distance, alpha)

    return total

def interference_from_arrays(
        distances: np.ndarray,
        powers: np.ndarray,
        on: np.ndarray,
        fades: np.ndarray,
        alpha: float) -> float | np.ndarray:
    """
    Vectorized interference for candidates already filtered by the caller.

    The last axis runs over the candidates. Leading axes of the powers, MAC
    indicators and fades index independent slots.

    Parameters
    ----------
    distances : np.ndarray
        Distances from the candidates to the receiver.
    powers : np.ndarray
        Transmit powers, infinite for silent nodes with an empty cone.
    on : np.ndarray
        MAC indicators.
    fades : np.ndarray
        Fading powers towards the receiver.
    alpha : float
        Path loss exponent.

    Returns
    -------
    float | np.ndarray
        Interference power, one value per slot.
    """

    distances = np.asarray(distances, dtype=float)
    on = np.asarray(on, dtype=bool)
    if np.any(on & (distances == 0)):
        raise GeometryError("An active transmitter coincides with the receiver.")
    if distances.shape[-1] == 0:
        total = np.zeros(on.shape[:-1])
    else:
        losses = path_loss(np.where(distances > 0, distances, 1.), alpha)
        with np.errstate(invalid="ignore"):
            total = np.where(on, powers * fades * losses, 0.).sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total

def sinr(power: float, fade: float, loss: float, interference_power: float, gamma: float, noise: float) -> float:
    """
    Compute the SINR P h l / (gamma I + N), elementwise for arrays.

    The MAC indicators are applied by the caller: the SINR is zero unless
    the transmitter is on and the receiver is off.

    Parameters
    ----------
    power : float
        Signal transmit power.
    fade : float
        Signal fading power.
    loss : float
        Signal path loss.
    interference_power : float
        Interference I.
    gamma : float
        Interference suppression factor.
    noise : float
        Noise power N.

    Returns
    -------
    float
        SINR value.

    Raises
    ------
    ModelError
        Raise error if the denominator is zero.
    """

    denominator = gamma * np.asarray(interference_power) + noise
    if np.any(denominator <= 0):
        raise ModelError(
            "The SINR denominator is zero, please use a positive noise power.")

    return power * fade * loss / denominator

def no_interference_success_probability(signal_power_loss: float, channel: ChannelParams) -> float:
    """
    Probability that the SINR exceeds beta without interference, exp(-mu beta N / (P l)).

    Parameters
    ----------
    signal_power_loss : float
        Product of the signal power and path loss, c under power control.
    channel : ChannelParams
        Channel parameters.

    Returns
    -------
    float
        Success probability over the fading.
    """

    return float(np.exp(-channel.mu * channel.beta * channel.noise / signal_power_loss))
