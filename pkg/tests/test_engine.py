"""
Test file for the engine module.
"""

###########
# Imports #
###########

# Python imports #

import os
import sys
sys.path.append(".")

# Dependencies #

import numpy as np
import pytest
from scipy import stats

# Local imports #

# Import objects to test
from sinr_velocity._common import ParameterError, NoNeighborError, StreamSet, make_rng
from sinr_velocity.engine import (
    Network,
    HopRecord,
    PacketTrace,
    TraversalState,
    sample_hop_chain,
    augment_stationary,
    build_palm_network,
    run_exit_time,
    replay_exit_times,
    run_tagged_packet,
    information_velocity
)
from sinr_velocity.analysis import nn_cone_cdf
from sinr_velocity.params import SimParams
from sinr_velocity.spatial import PointSet

# Import test tools
from tests._common import (
    check_value,
    output_folder,
    fast_exit_time_parameters,
    fast_traversal_parameters
)

###########
# Helpers #
###########

def two_node_network(**overrides) -> Network:
    """
    Source at the origin and a single receiver at (1, 0), no interferer.
    """

    params = SimParams(params_dict=overrides)
    window = params.exit_time_window()
    ps = PointSet(np.array([[0., 0.], [1., 0.]]), params.intensity, window, tagged_index=0)
    return Network(params, ps)

def handmade_trace() -> PacketTrace:
    trace = PacketTrace(start=np.zeros(2))
    trace.hops.append(HopRecord(0, np.zeros(2), np.array([1., 0.]), T=2, censored=False, power=1., probability=0.5))
    trace.hops.append(HopRecord(1, np.array([1., 0.]), np.array([3., 0.]), T=3, censored=False, power=1., probability=0.5))
    return trace

#########
# Tests #
#########

def test_sample_hop_chain():
    lengths, angles = sample_hop_chain(100000, 1., 6, make_rng(0))
    check_value(6 / np.pi, np.mean(lengths ** 2), 0.02)
    assert np.all(np.abs(angles) < np.pi / 6)

def test_palm_network_tagged_point():
    params = SimParams(params_dict=fast_exit_time_parameters)
    network = build_palm_network(params, StreamSet(params.seed))
    assert np.array_equal(network.ps.tagged_point, [0., 0.])
    traversal = build_palm_network(params, StreamSet(params.seed), traversal=True)
    assert np.array_equal(traversal.ps.tagged_point, [params.guard, 0.])

def test_exit_time_without_interference():
    # q = p_source * P[receiver off] * exp(-mu beta N / c)
    network = two_node_network()
    q = 0.9 * 0.1 * np.exp(-0.5 * 0.1 * 0.9)
    exit_times, censored = replay_exit_times(network, 4000, make_rng(1))
    assert not censored.any()
    check_value(1 / q, np.mean(exit_times), 0.06)
    check_value((1 - q) ** 10, np.mean(exit_times > 10), 0.1)

def test_exit_time_is_reproducible():
    params = SimParams(params_dict=fast_exit_time_parameters)
    first = run_exit_time(params, StreamSet(params.seed, 3))
    second = run_exit_time(params, StreamSet(params.seed, 3))
    assert first.T == second.T
    assert first.nn_distance == second.nn_distance
    assert first.T >= 1

def test_exit_time_censoring():
    params = SimParams(params_dict=fast_exit_time_parameters | {"beta": 1e6, "hop_horizon": 20})
    sample = run_exit_time(params, StreamSet(params.seed))
    assert sample.censored
    assert sample.T == 20

def test_exit_time_without_neighbor():
    params = SimParams()
    ps = PointSet(np.array([[0., 0.], [-1., 0.]]), 1., params.exit_time_window(), tagged_index=0)
    with pytest.raises(NoNeighborError):
        run_exit_time(params, StreamSet(0), Network(params, ps))

def test_real_delay_ignores_virtual_points():
    params = SimParams(params_dict=fast_exit_time_parameters)
    network = build_palm_network(params, StreamSet(params.seed))
    source_index = network.ps.tagged_index
    receiver_index, _ = network.next_hop(source_index)

    context = network.prepare_hop(source_index, receiver_index)
    T, _ = network.contend(context, make_rng(5), max_slots=100000)

    network.add_virtual_points(make_rng(6).uniform(-5., 5., (20, 2)))
    context = network.prepare_hop(source_index, receiver_index, with_virtual=True)
    coupled_T, T_prime = network.contend(context, make_rng(5), make_rng(7), max_slots=100000)
    assert coupled_T == T
    assert T_prime >= T

def test_slot_outcomes():
    network = two_node_network()
    context = network.prepare_hop(0, 1)
    outcomes = network.slot_outcomes(context, make_rng(8), 200)
    assert len(outcomes) == 200
    for outcome in outcomes:
        assert outcome.interference == 0.
        if outcome.success:
            assert outcome.source_on and outcome.receiver_off
        if not (outcome.source_on and outcome.receiver_off):
            assert outcome.sinr == 0.

def test_distance_series():
    trace = handmade_trace()
    assert np.array_equal(trace.distance_series(), [0., 1., 1., 1., 3.])
    velocity, series = information_velocity(trace)
    check_value(3 / 5, velocity)
    assert len(series) == 5

def test_censored_hop_is_not_delivered():
    trace = handmade_trace()
    trace.hops.append(HopRecord(2, np.array([3., 0.]), np.array([4., 0.]), T=4, censored=True, power=1., probability=0.5))
    assert list(trace.delays()) == [2, 3]
    assert trace.nb_censored == 1
    assert trace.elapsed() == 9
    assert trace.distance_series()[-1] == 3.

def test_empty_trace_velocity():
    with pytest.raises(ParameterError):
        information_velocity(PacketTrace(start=np.zeros(2)))

def test_enhanced_clock_requires_stationary_mode():
    with pytest.raises(ParameterError):
        handmade_trace().delays("enhanced")

def test_invariant_violations():
    trace = handmade_trace()
    assert trace.check_invariants(np.pi / 6) == []
    trace.hops.append(HopRecord(2, np.array([3., 0.]), np.array([2.5, 0.2]), T=1, censored=False, power=1., probability=0.5))
    violations = trace.check_invariants(np.pi / 6)
    assert any("progress" in violation for violation in violations)

def test_tagged_packet_traversal():
    params = SimParams(params_dict=fast_traversal_parameters)
    trace = run_tagged_packet(params, StreamSet(params.seed))
    assert trace.termination in ("guard-exit", "dead-end", "horizon")
    assert len(trace.hops) > 0
    assert trace.check_invariants(np.pi / params.m) == []
    assert np.all(trace.delays() >= 1)
    if trace.termination == "guard-exit":
        assert trace.hops[-1].destination[0] > params.L_x - params.guard
        velocity, _ = information_velocity(trace)
        assert velocity > 0

def test_stationary_traversal():
    params = SimParams(params_dict=fast_traversal_parameters | {"stationary_mode": True})
    trace = run_tagged_packet(params, StreamSet(params.seed))
    assert trace.stationary
    assert trace.nb_virtual_points > 0
    for hop in trace.hops:
        assert hop.T_prime >= hop.T
    v_enhanced, _ = information_velocity(trace, "enhanced")
    v_plain, _ = information_velocity(trace, "plain")
    assert v_enhanced <= v_plain

def test_plot_velocity_graph():
    trace = handmade_trace()
    trace.plot_graph("d_over_t", save_path=os.path.join(output_folder, "velocity.png"),
                     clear_before_plot=True, hold_plot=True)

def test_plot_log_scale_graph():
    trace = handmade_trace()
    trace.plot_graph("d", save_path=os.path.join(output_folder, "distance_log.png"),
                     clear_before_plot=True, hold_plot=True, log_scale=True)

def test_sector_refill_counts():
    params = SimParams(params_dict=fast_traversal_parameters | {"stationary_mode": True})
    network = build_palm_network(params, StreamSet(params.seed), traversal=True)
    state = TraversalState(network, network.ps.tagged_index)
    hop = HopRecord(0, np.array([50., 0.]), np.array([52., 0.]), T=1, censored=False, power=1., probability=0.5)
    state.hops.append(hop)
    half_angle = np.pi / params.m

    counts = []
    for replication in range(2000):
        network.virtual_points = np.empty((0, 2))
        refill = augment_stationary(state, params, StreamSet(params.seed, replication))
        offsets = refill - hop.source
        assert np.all(np.hypot(offsets[:, 0], offsets[:, 1]) <= hop.R)
        assert np.all(np.abs(np.arctan2(offsets[:, 1], offsets[:, 0])) <= half_angle)
        counts.append(len(refill))

    # Poisson count of mean lambda phi R^2
    expected = params.intensity * half_angle * hop.R ** 2
    check_value(expected, np.mean(counts), 0.05)
    check_value(expected, np.var(counts), 0.15)

def test_hops_are_iid():
    params = SimParams(params_dict={"L_x": 2000., "L_y": 200., "guard": 2., "beta": 1e-3, "seed": 17})
    trace = run_tagged_packet(params, StreamSet(params.seed))
    assert trace.termination == "guard-exit"
    lengths = np.array([hop.R for hop in trace.hops])
    angles = np.array([hop.theta for hop in trace.hops])
    assert len(lengths) > 1000

    half_angle = np.pi / params.m
    assert stats.kstest(lengths, lambda r: nn_cone_cdf(r, params.intensity, params.m)).pvalue > 1e-3
    assert stats.kstest(angles, stats.uniform(loc=-half_angle, scale=2 * half_angle).cdf).pvalue > 1e-3
    assert abs(np.corrcoef(lengths[:-1], lengths[1:])[0, 1]) < 0.1
    assert abs(np.corrcoef(angles[:-1], angles[1:])[0, 1]) < 0.1
    assert abs(np.corrcoef(lengths, angles)[0, 1]) < 0.1
