"""
Module to define the transmission policies: nearest neighbor power control, ALOHA baseline,
MAC draws and the destination cone choice of interferers.
"""

###########
# Imports #
###########

# Python imports #

from typing import Literal, get_args

# Dependencies #

import numpy as np

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    NoNeighborError,
    check_positive,
    check_open_unit_interval
)
from sinr_velocity.channel import ChannelParams, path_loss
from sinr_velocity.spatial import PointSet, ConePartition, nearest_in_cone

#############
# Constants #
#############

ConeChoiceMode = Literal["uniform_random", "worst_case"]

###########
# Classes #
###########

class PowerControlPolicy:
    """
    Nearest neighbor distance based power control.

    A node whose destination cone nearest neighbor is at distance d transmits with
    power P = c / l(d) and probability p = M / P, where c = M / (1 - epsilon).

    Parameters
    ----------
    M : float
        Average power constraint.
    epsilon : float
        Slack in (0, 1), the transmission probability never exceeds 1 - epsilon.
    """

    M: float
    epsilon: float

    def __init__(self, M: float = 1., epsilon: float = 0.1):
        check_positive("M", M)
        check_open_unit_interval("epsilon", epsilon)
        self.M = float(M)
        self.epsilon = float(epsilon)

    @property
    def c(self) -> float:
        return self.M / (1 - self.epsilon)

    @property
    def average_power(self) -> float:
        return self.M

    def power_and_prob(self, nn_distance: float, alpha: float) -> tuple[float, float]:
        if not nn_distance > 0:
            raise ParameterError(
                f"The nearest neighbor distance must be positive, got {nn_distance}.")
        power = self.c / path_loss(nn_distance, alpha)
        return power, self.M / power

    def powers_and_probs(self, nn_distances: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        """
        Vectorized power and probability. Infinite distances (empty cones) give a zero probability.

        Parameters
        ----------
        nn_distances : np.ndarray
            Nearest neighbor distances, positive or infinite.
        alpha : float
            Path loss exponent.

        Returns
        -------
        tuple[np.ndarray, np.ndarray]
            Powers (infinite for empty cones) and transmission probabilities.
        """

        with np.errstate(over="ignore"):
            powers = self.c * np.maximum(np.power(nn_distances, alpha), 1.)
        probabilities = np.where(np.isfinite(powers), self.M / powers, 0.)
        return powers, probabilities

class AlohaPolicy:
    """
    ALOHA baseline where every node transmits with fixed power and probability.

    Parameters
    ----------
    P_fixed : float
        Transmit power.
    p_fixed : float
        Transmission probability in (0, 1).
    """

    P_fixed: float
    p_fixed: float

    def __init__(self, P_fixed: float = 2., p_fixed: float = 0.5):
        check_positive("P_fixed", P_fixed)
        check_open_unit_interval("p_fixed", p_fixed)
        self.P_fixed = float(P_fixed)
        self.p_fixed = float(p_fixed)

    @classmethod
    def with_average_power(cls, M: float, p_fixed: float = 0.5) -> "AlohaPolicy":
        """
        Create the ALOHA policy with the same average power as a power control policy.
        """

        return cls(P_fixed=M / p_fixed, p_fixed=p_fixed)

    @property
    def average_power(self) -> float:
        return self.P_fixed * self.p_fixed

    def power_and_prob(self, nn_distance: float, alpha: float) -> tuple[float, float]:
        if not nn_distance > 0:
            raise ParameterError(
                f"The nearest neighbor distance must be positive, got {nn_distance}.")
        return self.P_fixed, self.p_fixed

    def powers_and_probs(self, nn_distances: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        nn_distances = np.asarray(nn_distances, dtype=float)
        return np.full(nn_distances.shape, self.P_fixed), np.full(nn_distances.shape, self.p_fixed)

class ConeChoiceModel:
    """
    Destination cone choice of the interfering nodes.

    Parameters
    ----------
    mode : Literal["uniform_random", "worst_case"], optional
        uniform_random redraws a non-empty cone uniformly at every slot, worst_case
        always uses the cone maximizing the interference, by default "uniform_random"
    """

    mode: ConeChoiceMode

    def __init__(self, mode: ConeChoiceMode = "uniform_random"):
        if mode not in get_args(ConeChoiceMode):
            raise ParameterError(
                f"Unknown cone choice mode '{mode}', please use one of {get_args(ConeChoiceMode)}.")
        self.mode = mode

    def choose_distances(self, cone_distances: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """
        Vectorized cone choice, returning the nearest neighbor distance in the chosen cone.

        Parameters
        ----------
        cone_distances : np.ndarray
            Nearest neighbor distance per node and cone, shape (n, m), infinite when empty.
        uniforms : np.ndarray
            Uniform draws of shape (n,) or (nb_slots, n), consumed by both modes to keep
            the streams aligned.

        Returns
        -------
        np.ndarray
            Distance per node with the shape of uniforms, infinite when every cone is empty.
        """

        uniforms = np.asarray(uniforms, dtype=float)
        if self.mode == "worst_case":
            return np.broadcast_to(np.min(cone_distances, axis=1, initial=np.inf), uniforms.shape).copy()

        # Move the finite distances first, keeping the cone order
        finite = np.isfinite(cone_distances)
        nb_nonempty = finite.sum(axis=1)
        order = np.argsort(~finite, axis=1, kind="stable")
        compacted = np.take_along_axis(cone_distances, order, axis=1)
        choice = np.minimum(np.floor(uniforms * nb_nonempty).astype(int), np.maximum(nb_nonempty - 1, 0))
        return compacted[np.arange(len(cone_distances)), choice]

#############
# Functions #
#############

def power_and_prob(policy: PowerControlPolicy | AlohaPolicy, nn_distance: float, alpha: float) -> tuple[float, float]:
    """
    Compute the transmit power and probability of a node.

    Parameters
    ----------
    policy : PowerControlPolicy | AlohaPolicy
        Transmission policy.
    nn_distance : float
        Distance to the nearest neighbor in the destination cone.
    alpha : float
        Path loss exponent.

    Returns
    -------
    tuple[float, float]
        Power P and probability p, with p * P = M.
    """

    return policy.power_and_prob(nn_distance, alpha)

def mac_draw(p: float | np.ndarray, rng: np.random.Generator, size: int | None = None) -> bool | np.ndarray:
    """
    Draw the Bernoulli MAC states.

    Parameters
    ----------
    p : float | np.ndarray
        Transmission probabilities in [0, 1).
    rng : np.random.Generator
        Random stream.
    size : int | None, optional
        Number of draws for a scalar probability, by default None

    Returns
    -------
    bool | np.ndarray
        True for transmitting nodes.
    """

    p_array = np.asarray(p, dtype=float)
    if np.any(p_array < 0) or np.any(p_array >= 1):
        raise ParameterError("Transmission probabilities must lie in [0, 1).")

    if p_array.ndim == 0 and size is None:
        return bool(rng.random() < p_array)
    shape = size if p_array.ndim == 0 else p_array.shape
    return rng.random(shape) < p_array

def laplace_factor(
        p: float | np.ndarray,
        P: float | np.ndarray,
        loss: float | np.ndarray,
        channel: ChannelParams,
        signal_power_loss: float) -> float | np.ndarray:
    """
    Conditional Laplace factor E[exp(-a 1_z P_z h l)] of one interferer.

    With a = mu beta gamma / (P_o l_o), the factor is 1 - p + p c' / (c' + beta gamma l P)
    where c' = P_o l_o is the received signal level (c under power control).

    Parameters
    ----------
    p : float | np.ndarray
        Transmission probability of the interferer.
    P : float | np.ndarray
        Transmit power of the interferer.
    loss : float | np.ndarray
        Path loss from the interferer to the receiver.
    channel : ChannelParams
        Channel parameters.
    signal_power_loss : float
        Product of the signal power and signal path loss.

    Returns
    -------
    float | np.ndarray
        Factor in (0, 1].
    """

    beta_gamma_load = channel.beta_gamma * np.asarray(loss) * np.asarray(P)
    return 1 - p + p * signal_power_loss / (signal_power_loss + beta_gamma_load)

def interferer_cone(
        model: ConeChoiceModel,
        z: np.ndarray,
        ps: PointSet,
        partition: ConePartition,
        receiver: np.ndarray,
        policy: PowerControlPolicy | AlohaPolicy,
        channel: ChannelParams,
        rng: np.random.Generator,
        signal_power_loss: float | None = None) -> int:
    """
    Choose the destination cone of an interfering node for one slot.

    Per-node version of ConeChoiceModel.choose_distances, which the simulator
    applies to whole blocks of slots. Ties between cones go to the nearest neighbor.

    Parameters
    ----------
    model : ConeChoiceModel
        Cone choice model.
    z : np.ndarray
        Position of the interferer.
    ps : PointSet
        Point set containing the neighbors of z.
    partition : ConePartition
        Cone partition.
    receiver : np.ndarray
        Position of the tagged receiver.
    policy : PowerControlPolicy | AlohaPolicy
        Transmission policy of the interferer.
    channel : ChannelParams
        Channel parameters.
    rng : np.random.Generator
        Random stream.
    signal_power_loss : float | None, optional
        Received signal level P_o l(d_o) of the tagged link, by default c under power control.
        Required by the worst case choice under ALOHA.

    Returns
    -------
    int
        Index of the chosen cone.

    Raises
    ------
    NoNeighborError
        Raise error if every cone of z is empty, the node then stays silent.
    ParameterError
        Raise error if the signal level is missing under ALOHA.
    """

    z = np.asarray(z, dtype=float)
    nonempty_cones = []
    distances = []
    for cone_k in range(partition.m):
        neighbor = nearest_in_cone(ps, z, cone_k, partition)
        if neighbor is not None:
            nonempty_cones.append(cone_k)
            distances.append(neighbor[1])
    if not nonempty_cones:
        raise NoNeighborError(
            f"The node at {tuple(z)} has no neighbor in any cone.")

    if model.mode == "uniform_random":
        return int(nonempty_cones[rng.integers(len(nonempty_cones))])

    # Worst case: minimize the Laplace factor of the interferer at the receiver
    loss = path_loss(np.hypot(*(z - np.asarray(receiver, dtype=float))), channel.alpha)
    if signal_power_loss is None:
        if not isinstance(policy, PowerControlPolicy):
            raise ParameterError("The worst case cone under ALOHA needs the received signal level.")
        signal_power_loss = policy.c
    check_positive("signal_power_loss", signal_power_loss)
    factors = []
    for distance in distances:
        P, p = policy.power_and_prob(distance, channel.alpha)
        factors.append(laplace_factor(p, P, loss, channel, signal_power_loss))

    return int(nonempty_cones[int(np.lexsort((distances, factors))[0])])
