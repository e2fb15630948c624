"""
Module to simulate the slotted space-time SINR network.

It contains the per-hop contention used by the exit time experiment, the traversal
of a tagged packet along the conic forwarding path and the virtual interferers
rendering the enhanced delays stationary.
"""

###########
# Imports #
###########

# Python imports #

import logging
from typing import Literal

# Dependencies #

import numpy as np

# Local imports #

from sinr_velocity._common import (
    ParameterError,
    NoNeighborError,
    StreamSet,
    plot_graph
)
from sinr_velocity.channel import ChannelParams, path_loss, sample_fading, interference_from_arrays, sinr
from sinr_velocity.params import SimParams
from sinr_velocity.protocol import mac_draw
from sinr_velocity.spatial import (
    PointSet,
    ConeNeighborIndex,
    sample_ppp,
    palm_condition
)

#############
# Constants #
#############

logger = logging.getLogger(__name__)

# Destination cone of the tagged packet, destination located at (infinity, 0)
DESTINATION_CONE = 0

# Slots simulated per vectorized block
MIN_BLOCK_SIZE = 16
MAX_BLOCK_SIZE = 512

# Number of sample points on each sector boundary for the overlap check
SECTOR_BOUNDARY_SAMPLES = 16

Clock = Literal["plain", "enhanced"]

VARIABLE_TO_LABEL = {
    "d": "Distance from the start",
    "d_over_t": "Distance over time"
}

#############
# Functions #
#############

def sample_hop_chain(nb_hops: int, intensity: float, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """
    Sample i.i.d. hop displacements (R, theta) of the conic forwarding path.

    R has the density of the nearest neighbor distance in a cone,
    R^2 being exponential of mean m / (pi lambda), and theta is uniform on (-phi, phi).

    Parameters
    ----------
    nb_hops : int
        Number of hops.
    intensity : float
        Intensity of the point process.
    m : int
        Number of cones.
    rng : np.random.Generator
        Random stream.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Hop lengths and angles.
    """

    half_angle = np.pi / m
    lengths = np.sqrt(rng.exponential(m / (np.pi * intensity), nb_hops))
    angles = rng.uniform(-half_angle, half_angle, nb_hops)
    return lengths, angles

def build_palm_network(params: SimParams, streams: StreamSet, location: np.ndarray | None = None, traversal: bool = False) -> "Network":
    """
    Sample a Poisson point process and condition it to have a tagged point.

    Parameters
    ----------
    params : SimParams
        Simulation parameters.
    streams : StreamSet
        Random streams of the replication, the geometry stream is used.
    location : np.ndarray | None, optional
        Location of the tagged point, by default the window center, or (G, 0) for a traversal.
    traversal : bool, optional
        Use the strip window of the traversal, by default False

    Returns
    -------
    Network
        Network with the tagged point.
    """

    window = params.traversal_window() if traversal else params.exit_time_window()
    if location is None:
        location = np.array([params.guard, 0.]) if traversal else window.center
    ps = sample_ppp(params.intensity, window, streams.geometry)
    return Network(params, palm_condition(ps, location))

def run_exit_time(params: SimParams, streams: StreamSet, network: "Network | None" = None) -> "ExitTimeSample":
    """
    Simulate the exit time of a packet from the tagged point to its destination cone nearest neighbor.

    Parameters
    ----------
    params : SimParams
        Simulation parameters, hop_horizon caps the number of slots.
    streams : StreamSet
        Random streams of the replication.
    network : Network | None, optional
        Realization to use, by default a new Palm realization is sampled.

    Returns
    -------
    ExitTimeSample
        Exit time, censored at the horizon.

    Raises
    ------
    NoNeighborError
        Raise error if the destination cone of the tagged point is empty.
    """

    if network is None:
        network = build_palm_network(params, streams)
    source_index = network.ps.tagged_index
    neighbor = network.next_hop(source_index)
    if neighbor is None:
        raise NoNeighborError("The destination cone of the tagged point is empty.")
    receiver_index, distance = neighbor

    context = network.prepare_hop(source_index, receiver_index)
    T, _ = network.contend(context, streams.real_slots, max_slots=params.hop_horizon)
    censored = T is None

    return ExitTimeSample(
        T=params.hop_horizon if censored else T,
        censored=censored,
        nn_distance=distance,
        probability=context.source_probability)

def replay_exit_times(network: "Network", nb_replays: int, rng: np.random.Generator, max_slots: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Replay the fading and MAC randomness on a fixed realization.

    Parameters
    ----------
    network : Network
        Fixed realization with a tagged point.
    nb_replays : int
        Number of replays.
    rng : np.random.Generator
        Random stream of the slots.
    max_slots : int | None, optional
        Horizon of each replay, by default params.hop_horizon

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Exit times (horizon value when censored) and censoring flags.
    """

    if max_slots is None:
        max_slots = network.params.hop_horizon
    source_index = network.ps.tagged_index
    neighbor = network.next_hop(source_index)
    if neighbor is None:
        raise NoNeighborError("The destination cone of the tagged point is empty.")
    context = network.prepare_hop(source_index, neighbor[0])

    exit_times = np.empty(nb_replays, dtype=int)
    censored = np.zeros(nb_replays, dtype=bool)
    for replay in range(nb_replays):
        T, _ = network.contend(context, rng, max_slots=max_slots)
        censored[replay] = T is None
        exit_times[replay] = max_slots if T is None else T

    return exit_times, censored

def augment_stationary(state: "TraversalState", params: SimParams, streams: StreamSet) -> np.ndarray:
    """
    Add the virtual interferers of the stationary construction.

    Before the first hop, the backward chain of i.i.d. hops ending at X_0 is built until
    its depth behind X_0 exceeds the guard margin. After each completed hop, the cleared
    sector (X_i + C_1) inter B(X_i, R_i) is refilled with an independent Poisson process.
    Virtual points farther than the guard margin behind the packet are dropped.

    Parameters
    ----------
    state : TraversalState
        Current traversal state.
    params : SimParams
        Simulation parameters.
    streams : StreamSet
        Random streams, the backward chain and refill streams are used.

    Returns
    -------
    np.ndarray
        Updated virtual points.
    """

    network = state.network
    half_angle = np.pi / params.m

    if not state.hops:
        # Backward chain from X_0
        rng = streams.backward_chain
        chain = []
        position = state.start.copy()
        while state.start[0] - position[0] <= params.guard:
            length, angle = sample_hop_chain(1, params.intensity, params.m, rng)
            position = position - length[0] * np.array([np.cos(angle[0]), np.sin(angle[0])])
            chain.append(position)
        network.add_virtual_points(np.array(chain))
        logger.debug("Backward chain of %d virtual points added.", len(chain))
    else:
        # Refill the sector cleared by the last hop
        hop = state.hops[-1]
        rng = streams.refills
        nb_points = rng.poisson(params.intensity * half_angle * hop.R ** 2)
        radii = hop.R * np.sqrt(rng.random(nb_points))
        angles = rng.uniform(-half_angle, half_angle, nb_points)
        refill = hop.source[None, :] + np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
        network.add_virtual_points(refill)
        network.drop_virtual_points_behind(hop.destination[0] - params.guard)

    return network.virtual_points

def run_tagged_packet(params: SimParams, streams: StreamSet, network: "Network | None" = None) -> "PacketTrace":
    """
    Track a tagged packet forwarded to the nearest neighbor in the destination cone X_i + C_1.

    Parameters
    ----------
    params : SimParams
        Simulation parameters, horizon caps the total number of slots.
    streams : StreamSet
        Random streams of the replication.
    network : Network | None, optional
        Realization whose tagged point is X_0, by default sampled in the strip with X_0 = (G, 0).

    Returns
    -------
    PacketTrace
        Trace of the packet.
    """

    if network is None:
        network = build_palm_network(params, streams, traversal=True)
    window = network.ps.window
    state = TraversalState(network, network.ps.tagged_index)
    trace = PacketTrace(start=state.start, stationary=params.stationary_mode)
    exit_abscissa = window.x_max - params.guard

    if params.stationary_mode:
        augment_stationary(state, params, streams)

    clock = 0
    while True:
        neighbor = network.next_hop(state.current_index)
        if neighbor is None:
            trace.termination = "dead-end"
            logger.warning("Dead-end reached after %d hops.", len(trace.hops))
            break
        receiver_index, _ = neighbor

        context = network.prepare_hop(state.current_index, receiver_index, with_virtual=params.stationary_mode)
        remaining = params.horizon - clock
        T, T_prime = network.contend(
            context,
            streams.real_slots,
            streams.virtual_slots if params.stationary_mode else None,
            max_slots=remaining)

        hop = HopRecord(
            i=len(trace.hops),
            source=network.points[state.current_index],
            destination=network.points[receiver_index],
            T=remaining if T is None else T,
            censored=T is None,
            power=context.source_power,
            probability=context.source_probability)
        if params.stationary_mode:
            hop.T_prime = remaining if T_prime is None else T_prime
            hop.censored_prime = T_prime is None
        trace.hops.append(hop)
        state.hops.append(hop)

        measured_censored = hop.censored_prime if params.stationary_mode else hop.censored
        clock += hop.T_prime if params.stationary_mode else hop.T
        if measured_censored:
            trace.termination = "horizon"
            logger.debug("Horizon reached during hop %d.", hop.i)
            break

        logger.debug("Hop %d delivered: R=%.4f, theta=%.4f, T=%d.", hop.i, hop.R, hop.theta, hop.T)
        state.current_index = receiver_index
        if params.stationary_mode:
            augment_stationary(state, params, streams)
        if clock >= params.horizon:
            trace.termination = "horizon"
            break
        if hop.destination[0] > exit_abscissa:
            trace.termination = "guard-exit"
            break

    trace.nb_virtual_points = len(network.virtual_points)
    return trace

def information_velocity(trace: "PacketTrace", clock: Clock = "plain") -> tuple[float, np.ndarray]:
    """
    Estimate the information velocity d(t) / t at the end of the trace.

    Parameters
    ----------
    trace : PacketTrace
        Trace of the tagged packet.
    clock : Literal["plain", "enhanced"], optional
        Use the real delays T_i or the enhanced delays T'_i, by default "plain"

    Returns
    -------
    tuple[float, np.ndarray]
        Velocity estimate and the per-slot series d(t) / t.

    Raises
    ------
    ParameterError
        Raise error if the trace contains no slot.
    """

    distances = trace.distance_series(clock)
    if len(distances) == 0:
        raise ParameterError("The trace is empty, the velocity is undefined.")
    series = distances / np.arange(1, len(distances) + 1)

    return float(series[-1]), series

###########
# Classes #
###########

class ExitTimeSample:
    """
    Result of one exit time simulation.
    """

    def __init__(self, T: int, censored: bool, nn_distance: float, probability: float):
        self.T = int(T)
        self.censored = bool(censored)
        self.nn_distance = float(nn_distance)
        self.probability = float(probability)

class HopRecord:
    """
    Record of one hop of the tagged packet.

    Parameters
    ----------
    i : int
        Hop index.
    source : np.ndarray
        Position X_i.
    destination : np.ndarray
        Position X_{i+1}.
    T : int
        Delay in slots, or slots consumed when censored.
    censored : bool
        True if the hop was not delivered before the horizon.
    power : float
        Frozen transmit power of the packet during the hop.
    probability : float
        Frozen transmission probability of the packet during the hop.
    """

    T_prime: int | None = None
    censored_prime: bool = False

    def __init__(self, i: int, source: np.ndarray, destination: np.ndarray, T: int, censored: bool, power: float, probability: float):
        self.i = i
        self.source = np.asarray(source, dtype=float).copy()
        self.destination = np.asarray(destination, dtype=float).copy()
        self.T = int(T)
        self.censored = bool(censored)
        self.power = float(power)
        self.probability = float(probability)

    @property
    def R(self) -> float:
        return float(np.hypot(*(self.destination - self.source)))

    @property
    def theta(self) -> float:
        return float(np.arcsin((self.destination[1] - self.source[1]) / self.R))

    def delay(self, clock: Clock = "plain") -> tuple[int, bool]:
        """
        Delay and censoring flag measured with the given clock.
        """

        if clock == "plain":
            return self.T, self.censored
        if self.T_prime is None:
            raise ParameterError("The enhanced delay is only measured in stationary mode.")
        return self.T_prime, self.censored_prime

class PacketTrace:
    """
    Trace of the tagged packet along the conic forwarding path.

    Parameters
    ----------
    start : np.ndarray
        Starting point X_0.
    stationary : bool, optional
        True if the enhanced delays were measured, by default False
    """

    termination: Literal["horizon", "guard-exit", "dead-end"] | None = None
    nb_virtual_points: int = 0

    def __init__(self, start: np.ndarray, stationary: bool = False):
        self.start = np.asarray(start, dtype=float).copy()
        self.stationary = stationary
        self.hops: list[HopRecord] = []

    def delays(self, clock: Clock = "plain") -> np.ndarray:
        """
        Delays of the delivered hops, censored hops excluded.
        """

        return np.array([hop.delay(clock)[0] for hop in self.hops if not hop.delay(clock)[1]], dtype=int)

    @property
    def nb_censored(self) -> int:
        return sum(hop.censored for hop in self.hops)

    def elapsed(self, clock: Clock = "plain") -> int:
        return int(sum(hop.delay(clock)[0] for hop in self.hops))

    def completion_times(self, clock: Clock = "plain") -> tuple[np.ndarray, np.ndarray]:
        """
        Completion slots of the delivered hops and the distance of the packet from X_0 after each of them.
        """

        times = np.cumsum([hop.delay(clock)[0] for hop in self.hops], dtype=int)
        delivered = np.array([not hop.delay(clock)[1] for hop in self.hops], dtype=bool)
        positions = np.array([hop.destination for hop in self.hops]).reshape(-1, 2)
        distances = np.hypot(positions[:, 0] - self.start[0], positions[:, 1] - self.start[1])
        return times[delivered], distances[delivered]

    def distance_series(self, clock: Clock = "plain") -> np.ndarray:
        """
        Distance d(t) of the packet from X_0 at every slot t = 1, ..., elapsed.
        """

        times, distances = self.completion_times(clock)
        slots = np.arange(1, self.elapsed(clock) + 1)
        nb_delivered = np.searchsorted(times, slots, side="right")
        return np.concatenate(([0.], distances))[nb_delivered]

    def check_invariants(self, half_angle: float) -> list[str]:
        """
        Check the geometric invariants of the path.

        Parameters
        ----------
        half_angle : float
            Half angle phi of the cones.

        Returns
        -------
        list[str]
            Description of every violation, empty when the trace is valid.
        """

        violations = []
        for hop in self.hops:
            if not hop.destination[0] > hop.source[0]:
                violations.append(f"Hop {hop.i} does not progress along the x-axis.")
            if not abs(hop.theta) < half_angle + 1e-12:
                violations.append(f"Hop {hop.i} leaves the destination cone.")
            if hop.T < 1:
                violations.append(f"Hop {hop.i} has a non-positive delay.")
            if hop.T_prime is not None and hop.T_prime < hop.T:
                violations.append(f"Hop {hop.i} has an enhanced delay below the real delay.")

        # Sectors (X_i + C_1) inter B(X_i, R_i) must not overlap
        boundary_angles = np.linspace(-half_angle, half_angle, SECTOR_BOUNDARY_SAMPLES)
        for j, later_hop in enumerate(self.hops):
            radii = later_hop.R * np.linspace(0, 1, SECTOR_BOUNDARY_SAMPLES)[1:]
            samples = np.vstack([
                later_hop.source + np.column_stack((r * np.cos(boundary_angles), r * np.sin(boundary_angles)))
                for r in radii])
            for hop in self.hops[:j]:
                offsets = samples - hop.source
                distances = np.hypot(offsets[:, 0], offsets[:, 1])
                angles = np.arctan2(offsets[:, 1], offsets[:, 0])
                inside = (distances < hop.R * (1 - 1e-9)) & (np.abs(angles) < half_angle * (1 - 1e-9))
                if inside.any():
                    violations.append(f"Sectors of hops {hop.i} and {later_hop.i} overlap.")

        return violations

    def plot_graph(self, variable: Literal["d", "d_over_t"], clock: Clock = "plain", **kwargs):
        """
        Plot the evolution of the distance or of the velocity estimate.

        Parameters
        ----------
        variable : Literal["d", "d_over_t"]
            Name of the variable to plot.
        clock : Literal["plain", "enhanced"], optional
            Clock of the series, by default "plain"

        Note
        ----
        For more details on the optional arguments, please check sinr_velocity._common.plot_graph.
        """

        distances = self.distance_series(clock)
        slots = np.arange(1, len(distances) + 1)
        y_array = distances if variable == "d" else distances / slots

        plot_graph(
            x_array=slots,
            y_array=y_array,
            title=f"{VARIABLE_TO_LABEL[variable]} ({clock} clock)",
            data_label=variable,
            x_label="Time [slots]",
            y_label=VARIABLE_TO_LABEL[variable],
            **kwargs
        )

class TraversalState:
    """
    Mutable state of a traversal, consumed by the stationary construction.
    """

    def __init__(self, network: "Network", start_index: int):
        self.network = network
        self.current_index = start_index
        self.start = network.points[start_index].copy()
        self.hops: list[HopRecord] = []

class HopContext:
    """
    Geometry of one hop, shared by every slot of the contention.
    """

    source_power: float
    source_probability: float
    signal_loss: float
    receiver_cones: np.ndarray
    real_cones: np.ndarray
    real_distances: np.ndarray
    real_losses: np.ndarray
    virtual_cones: np.ndarray
    virtual_distances: np.ndarray

class Network:
    """
    Realization of the network: real points, virtual interferers and the per-cone
    nearest neighbor tables that fix the power of every node.

    Real nodes find their neighbors among real points only, so adding virtual
    interferers never changes their behavior. Virtual nodes find their neighbors among
    real and virtual points. Interference is summed over the transmitters within the
    guard margin of the receiver.

    Parameters
    ----------
    params : SimParams
        Simulation parameters.
    ps : PointSet
        Real points, with the tagged point.
    """

    def __init__(self, params: SimParams, ps: PointSet):
        self.params = params
        self.ps = ps
        self.points = ps.points
        self.channel = params.channel_params()
        self.policy = params.policy_model()
        self.cone_model = params.cone_choice_model()
        self.partition = params.partition()

        self.interference_index = ConeNeighborIndex(self.points, self.partition, max_radius=params.guard)
        self.path_index = ConeNeighborIndex(self.points, self.partition)
        self._real_cones = np.full((len(self.points), self.partition.m), np.nan)
        self.virtual_points = np.empty((0, 2))

    def next_hop(self, index: int, cone_k: int = DESTINATION_CONE) -> tuple[int, float] | None:
        """
        Nearest real neighbor of a real point in the given cone.
        """

        return self.path_index.nearest(self.points[index], cone_k)

    def real_cone_distances(self, indices: np.ndarray) -> np.ndarray:
        """
        Per-cone nearest neighbor distances of real points, computed on demand and cached.
        """

        indices = np.asarray(indices, dtype=int)
        missing = indices[np.isnan(self._real_cones[indices, 0])]
        if missing.size > 0:
            self._real_cones[missing], _ = self.interference_index.table(self.points[missing])
        return self._real_cones[indices]

    def add_virtual_points(self, points: np.ndarray):
        self.virtual_points = np.vstack((self.virtual_points, np.asarray(points, dtype=float).reshape(-1, 2)))

    def drop_virtual_points_behind(self, abscissa: float):
        self.virtual_points = self.virtual_points[self.virtual_points[:, 0] >= abscissa]

    def virtual_cone_distances(self, receiver: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Virtual points within the guard margin of the receiver and their per-cone
        nearest neighbor distances over real and virtual points.
        """

        guard = self.params.guard
        offsets = self.virtual_points - receiver
        near = np.hypot(offsets[:, 0], offsets[:, 1]) <= guard
        candidates = self.virtual_points[near]
        if len(candidates) == 0:
            return candidates, np.empty((0, self.partition.m))

        # Neighbors within the guard margin of a candidate lie within twice the margin of the receiver
        local_real = self.points[self.interference_index.tree.query_ball_point(receiver, r=2 * guard)]
        union_index = ConeNeighborIndex(np.vstack((local_real, self.virtual_points)), self.partition, max_radius=guard)
        cone_distances, _ = union_index.table(candidates)
        return candidates, cone_distances

    def prepare_hop(self, source_index: int, receiver_index: int, with_virtual: bool = False) -> HopContext:
        """
        Compute the geometry of a hop: frozen source power, candidate interferers and their cone tables.

        Parameters
        ----------
        source_index : int
            Index of the packet holder.
        receiver_index : int
            Index of its destination cone nearest neighbor.
        with_virtual : bool, optional
            Include the virtual interferers, by default False

        Returns
        -------
        HopContext
            Geometry of the hop.
        """

        alpha = self.channel.alpha
        source = self.points[source_index]
        receiver = self.points[receiver_index]
        signal_distance = float(np.hypot(*(receiver - source)))

        context = HopContext()
        context.source_power, context.source_probability = self.policy.power_and_prob(signal_distance, alpha)
        context.signal_loss = path_loss(signal_distance, alpha)
        context.receiver_cones = self.real_cone_distances(np.array([receiver_index]))

        # Real interferers within the guard margin of the receiver
        candidates = np.array(self.interference_index.tree.query_ball_point(receiver, r=self.params.guard), dtype=int)
        candidates = np.sort(candidates[(candidates != source_index) & (candidates != receiver_index)])
        context.real_cones = self.real_cone_distances(candidates)
        offsets = self.points[candidates] - receiver
        context.real_distances = np.hypot(offsets[:, 0], offsets[:, 1]) if len(candidates) else np.empty(0)
        context.real_losses = path_loss(context.real_distances, alpha) if len(candidates) else np.empty(0)

        context.virtual_cones = np.empty((0, self.partition.m))
        context.virtual_distances = np.empty(0)
        if with_virtual:
            virtual_candidates, context.virtual_cones = self.virtual_cone_distances(receiver)
            if len(virtual_candidates):
                offsets = virtual_candidates - receiver
                context.virtual_distances = np.hypot(offsets[:, 0], offsets[:, 1])

        return context

    def block_interference(self, cone_distances: np.ndarray, distances: np.ndarray, rng: np.random.Generator, nb_slots: int) -> np.ndarray:
        """
        Interference of a group of candidates over a block of slots.

        Each slot draws one cone uniform, one fade and one MAC state per candidate.
        """

        nb_candidates = len(distances)
        if nb_candidates == 0:
            return np.zeros(nb_slots)

        chosen = self.cone_model.choose_distances(cone_distances, rng.random((nb_slots, nb_candidates)))
        fades = sample_fading(self.channel.mu, rng, (nb_slots, nb_candidates))
        powers, probabilities = self.policy.powers_and_probs(chosen, self.channel.alpha)
        on = mac_draw(probabilities, rng)
        return interference_from_arrays(distances, powers, on, fades, self.channel.alpha)

    def draw_slots(
            self,
            context: HopContext,
            real_rng: np.random.Generator,
            nb_slots: int,
            virtual_rng: np.random.Generator | None = None) -> "SlotBlock":
        """
        Draw the randomness of a block of slots and the resulting SINR at the receiver.

        In each slot the source is on with its frozen probability, the receiver draws its own
        cone and MAC state, and the interferers draw cone, MAC state and fading. Virtual
        interferers use their own stream so that the real draws do not depend on them.

        Parameters
        ----------
        context : HopContext
            Geometry of the hop.
        real_rng : np.random.Generator
            Stream of the real nodes.
        nb_slots : int
            Number of slots.
        virtual_rng : np.random.Generator | None, optional
            Stream of the virtual nodes, by default None

        Returns
        -------
        SlotBlock
            Per-slot states and interference.
        """

        channel = self.channel

        # Source, receiver and signal draws
        source_on = mac_draw(context.source_probability, real_rng, size=nb_slots)
        signal_fades = sample_fading(channel.mu, real_rng, nb_slots)
        receiver_distance = self.cone_model.choose_distances(context.receiver_cones, real_rng.random((nb_slots, 1)))[:, 0]
        _, receiver_probability = self.policy.powers_and_probs(receiver_distance, channel.alpha)
        receiver_off = ~mac_draw(receiver_probability, real_rng)

        block = SlotBlock()
        block.source_on = source_on
        block.receiver_off = receiver_off
        block.signal = context.source_power * signal_fades * context.signal_loss
        block.real_interference = self.block_interference(context.real_cones, context.real_distances, real_rng, nb_slots)
        block.virtual_interference = np.zeros(nb_slots)
        if virtual_rng is not None:
            block.virtual_interference = self.block_interference(
                context.virtual_cones, context.virtual_distances, virtual_rng, nb_slots)
        return block

    def slot_outcomes(self, context: HopContext, rng: np.random.Generator, nb_slots: int) -> list["SlotOutcome"]:
        """
        Per-slot records of the real network, for diagnostics.
        """

        block = self.draw_slots(context, rng, nb_slots)
        values = block.sinr(self.channel)
        delivered = block.delivered(self.channel)
        return [
            SlotOutcome(
                slot=slot + 1,
                source_on=bool(block.source_on[slot]),
                receiver_off=bool(block.receiver_off[slot]),
                interference=float(block.real_interference[slot]),
                sinr=float(values[slot]),
                success=bool(delivered[slot]))
            for slot in range(nb_slots)
        ]

    def contend(
            self,
            context: HopContext,
            real_rng: np.random.Generator,
            virtual_rng: np.random.Generator | None = None,
            max_slots: int = 10000) -> tuple[int | None, int | None]:
        """
        Simulate the slots of one hop until delivery.

        The real delay T uses the real interferers only, the enhanced delay T' adds the
        virtual ones on the same draws, so that T <= T'.

        Parameters
        ----------
        context : HopContext
            Geometry of the hop.
        real_rng : np.random.Generator
            Stream of the real nodes.
        virtual_rng : np.random.Generator | None, optional
            Stream of the virtual nodes, None to measure T only, by default None
        max_slots : int, optional
            Horizon of the hop, by default 10000

        Returns
        -------
        tuple[int | None, int | None]
            Delays T and T' in slots, None when censored.
        """

        T = None
        T_prime = None
        elapsed = 0
        block_size = MIN_BLOCK_SIZE

        while elapsed < max_slots:
            nb_slots = min(block_size, max_slots - elapsed)
            block = self.draw_slots(context, real_rng, nb_slots, virtual_rng)

            delivered = block.delivered(self.channel)
            if T is None and delivered.any():
                T = elapsed + int(np.argmax(delivered)) + 1

            if virtual_rng is not None:
                delivered = block.delivered(self.channel, with_virtual=True)
                if delivered.any():
                    T_prime = elapsed + int(np.argmax(delivered)) + 1
                    break
            elif T is not None:
                break

            elapsed += nb_slots
            block_size = min(2 * block_size, MAX_BLOCK_SIZE)

        return T, T_prime

class SlotBlock:
    """
    Draws of a block of consecutive slots for one hop.
    """

    source_on: np.ndarray
    receiver_off: np.ndarray
    signal: np.ndarray
    real_interference: np.ndarray
    virtual_interference: np.ndarray

    def sinr(self, channel: ChannelParams, with_virtual: bool = False) -> np.ndarray:
        interference = self.real_interference + self.virtual_interference if with_virtual else self.real_interference
        values = sinr(self.signal, 1., 1., interference, channel.gamma, channel.noise)
        return np.where(self.source_on & self.receiver_off, values, 0.)

    def delivered(self, channel: ChannelParams, with_virtual: bool = False) -> np.ndarray:
        return self.source_on & self.receiver_off & (self.sinr(channel, with_virtual) > channel.beta)

class SlotOutcome:
    """
    Record of one slot at the receiver of the tagged packet.

    Parameters
    ----------
    slot : int
        Slot index, starting at 1.
    source_on : bool
        MAC state of the packet holder.
    receiver_off : bool
        True if the receiver listens.
    interference : float
        Interference at the receiver.
    sinr : float
        SINR of the tagged link, zero unless the source is on and the receiver off.
    success : bool
        True if the packet is delivered.
    """

    def __init__(self, slot: int, source_on: bool, receiver_off: bool, interference: float, sinr: float, success: bool):
        self.slot = slot
        self.source_on = source_on
        self.receiver_off = receiver_off
        self.interference = interference
        self.sinr = sinr
        self.success = success
