"""
Module running the acceptance suite: every check compares a simulation against its analytical oracle.

Sample sizes are multiplied by a scale factor, 1 giving the full suite.
"""

###########
# Imports #
###########

# Python imports #

import logging

# Dependencies #

import numpy as np
import pandas as pd
from scipy.integrate import dblquad
from scipy.stats import ttest_1samp

# Local imports #

from sinr_velocity._common import StreamSet, make_rng
from sinr_velocity.analysis import (
    BoundInputs,
    nn_cone_cdf,
    campbell_l_integral,
    laplace_lower_bound,
    laplace_exact,
    j_bound,
    hop_progress_mean,
    chernoff_zeta,
    choose_delta
)
from sinr_velocity.engine import (
    build_palm_network,
    replay_exit_times,
    run_tagged_packet,
    information_velocity,
    sample_hop_chain,
    PacketTrace
)
from sinr_velocity.estimators import (
    ks_statistic,
    stabilization,
    hill_tail_index,
    bootstrap_ci,
    relative_fluctuation,
    batch_means_ci,
    intervals_overlap
)
from sinr_velocity.experiment import ResultSummary, map_replications, exit_time_worker
from sinr_velocity.params import SimParams
from sinr_velocity.spatial import Window, sample_ppp, nearest_in_cone

#############
# Constants #
#############

logger = logging.getLogger(__name__)

# Purposes of the validation streams, after the simulation ones
CHECK_NN_LAW = 10
CHECK_LAPLACE = 11
CHECK_TAIL = 12
CHECK_CHERNOFF = 13

# Half width of the windows used to sample cone nearest neighbors
NN_SAMPLE_HALF_WIDTH = 6.

CAMPBELL_ALPHAS = (2.5, 3., 4., 6.)
CAMPBELL_REL_TOL = 1e-6

TAIL_MAX_K = 50
CHERNOFF_HOPS = (10, 20, 50)
INTENSITIES = (0.5, 1., 2.)

STABILIZATION_THRESHOLD = 0.05
CENSORING_THRESHOLD = 1e-3
ALOHA_HILL_THRESHOLD = 1.2
FLUCTUATION_THRESHOLD = 0.1
STABILIZATION_REFERENCE_SIZE = 10 ** 4
FLUCTUATION_REFERENCE_HORIZON = 10 ** 5
VELOCITY_TEST_LEVEL = 0.05

# Traversals of the velocity checks
VELOCITY_GUARD = 20.
VELOCITY_MIN_HORIZON = 10 ** 4
MAX_STRIP_EXTENSIONS = 4

#############
# Functions #
#############

def _scaled(size: int, scale: float, minimum: int) -> int:
    return max(minimum, int(round(size * scale)))

def check_nn_law(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Compare the cone nearest neighbor distances with 1 - exp(-lambda pi r^2 / m).
    """

    nb_samples = _scaled(10 ** 5, scale, 500)
    rng = make_rng(params.seed, 0, CHECK_NN_LAW)
    partition = params.partition()
    window = Window.centered(2 * NN_SAMPLE_HALF_WIDTH, 2 * NN_SAMPLE_HALF_WIDTH)
    origin = np.zeros(2)

    distances = []
    while len(distances) < nb_samples:
        neighbor = nearest_in_cone(sample_ppp(params.intensity, window, rng), origin, 0, partition)
        if neighbor is not None:
            distances.append(neighbor[1])

    statistic = ks_statistic(np.array(distances), lambda r: nn_cone_cdf(r, params.intensity, params.m))
    threshold = max(0.02, 1.63 / np.sqrt(nb_samples))
    summary.add_check("nn_cone_law_ks", statistic, threshold, statistic < threshold)

def check_campbell_integral(summary: ResultSummary):
    """
    Compare the closed form of the path loss integral with a two dimensional quadrature.
    """

    for alpha in CAMPBELL_ALPHAS:
        disk, _ = dblquad(lambda r, theta: r, 0, 2 * np.pi, 0, 1, epsabs=1e-12, epsrel=1e-10)
        tail, _ = dblquad(lambda r, theta: r ** (1 - alpha), 0, 2 * np.pi, 1, np.inf, epsabs=1e-12, epsrel=1e-10)
        closed_form = campbell_l_integral(alpha)
        error = abs(closed_form - (disk + tail)) / closed_form
        summary.add_check(f"campbell_integral_alpha_{alpha:g}", error, CAMPBELL_REL_TOL, error < CAMPBELL_REL_TOL)

def check_laplace_bound(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Monte Carlo conditional Laplace transform of the worst case interference against
    its product lower bound, over Palm realizations of a 40 x 40 window.
    """

    nb_realizations = _scaled(100, scale, 5)
    nb_draws = _scaled(10 ** 4, scale, 1000)
    bounds = BoundInputs.from_params(params)

    # The guard covers the whole window so that no interferer is neglected
    window_params = params.copy(policy="power_control", L_x=40., L_y=40., guard=60., cone_choice="worst_case")
    violations = 0
    exact_violations = 0
    for realization in range(nb_realizations):
        streams = StreamSet(params.seed, realization)
        network = build_palm_network(window_params, streams)
        source_index = network.ps.tagged_index
        neighbor = network.next_hop(source_index)
        if neighbor is None:
            continue
        receiver_index = neighbor[0]
        context = network.prepare_hop(source_index, receiver_index)

        rng = streams.stream(CHECK_LAPLACE)
        interference = network.block_interference(context.real_cones, context.real_distances, rng, nb_draws)
        values = np.exp(-bounds.a * interference)
        estimate = values.mean()
        standard_error = values.std(ddof=1) / np.sqrt(nb_draws)

        bound = laplace_lower_bound(network.ps, network.points[receiver_index], bounds.c1, params.alpha)
        exact = laplace_exact(context.real_cones, context.real_losses, window_params)
        violations += estimate + 3 * standard_error < bound
        exact_violations += exact < bound * (1 - 1e-12)

    summary.add_check("laplace_lower_bound_violations", violations, 0, violations == 0)
    summary.add_check("laplace_exact_below_bound", exact_violations, 0, exact_violations == 0)

def check_geometric_tail(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Empirical conditional survival P[T > k | Phi] against (1 - J)^k for k = 1, ..., 50.
    """

    nb_realizations = _scaled(20, scale, 2)
    nb_replays = _scaled(10 ** 4, scale, 500)
    tail_params = params.copy(policy="power_control")
    ks = np.arange(1, TAIL_MAX_K + 1)
    violations = 0

    for realization in range(nb_realizations):
        streams = StreamSet(params.seed, realization)
        network = build_palm_network(tail_params, streams)
        source_index = network.ps.tagged_index
        neighbor = network.next_hop(source_index)
        if neighbor is None:
            continue
        context = network.prepare_hop(source_index, neighbor[0])
        J = j_bound(network.ps, network.points[neighbor[0]], tail_params, context.source_probability)

        exit_times, _ = replay_exit_times(network, nb_replays, streams.stream(CHECK_TAIL), max_slots=TAIL_MAX_K + 1)
        survival = (exit_times[None, :] > ks[:, None]).mean(axis=1)
        standard_error = np.sqrt((survival * (1 - survival) + 1 / nb_replays) / nb_replays)
        violations += int(np.sum(survival > (1 - J) ** ks + 3 * standard_error))

    summary.add_check("geometric_tail_violations", violations, 0, violations == 0)

def _exit_time_samples(params: SimParams, nb_samples: int, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    params = params.copy(replications=nb_samples)
    tasks = [(params.to_dict(), replication) for replication in range(nb_samples)]
    frame = pd.DataFrame(map_replications(exit_time_worker, tasks, jobs, description="exit times"))
    frame = frame[~frame["no_neighbor"]]
    return frame["T"].to_numpy(dtype=float), frame["censored"].to_numpy(dtype=bool)

def stabilization_threshold(nb_samples: int) -> float:
    """
    Running mean stabilization threshold, widened as 1 / sqrt(n) below 10^4 samples.
    """

    return STABILIZATION_THRESHOLD * max(1., np.sqrt(STABILIZATION_REFERENCE_SIZE / nb_samples))

def check_finiteness(params: SimParams, summary: ResultSummary, scale: float = 1., jobs: int = 1, label: str = "finiteness"):
    """
    Stabilization of the running mean of T under power control and negligible censoring.
    """

    nb_samples = _scaled(10 ** 4, scale, 200)
    delays, censored = _exit_time_samples(params.copy(policy="power_control"), nb_samples, jobs)
    change = stabilization(delays)
    threshold = stabilization_threshold(nb_samples)
    censored_fraction = float(censored.mean())
    summary.add_check(f"{label}_running_mean_change", change, threshold, change < threshold)
    summary.add_check(f"{label}_censored_fraction", censored_fraction, CENSORING_THRESHOLD,
                      censored_fraction < CENSORING_THRESHOLD)

def check_aloha_contrast(params: SimParams, summary: ResultSummary, scale: float = 1., jobs: int = 1):
    """
    Under ALOHA the running mean does not stabilize and the tail index is at most 1.2.
    """

    nb_samples = _scaled(10 ** 4, scale, 200)
    delays, censored = _exit_time_samples(params.copy(policy="aloha"), nb_samples, jobs)
    change = stabilization(delays)
    tail_index = hill_tail_index(delays[~censored])
    summary.add_check("aloha_running_mean_change", change, STABILIZATION_THRESHOLD, change >= STABILIZATION_THRESHOLD)
    summary.add_check("aloha_hill_tail_index", tail_index, ALOHA_HILL_THRESHOLD, tail_index <= ALOHA_HILL_THRESHOLD)

def velocity_horizon(params: SimParams, scale: float) -> int:
    return int(max(VELOCITY_MIN_HORIZON, round(params.horizon * min(scale, 1.))))

def fluctuation_threshold(horizon: int) -> float:
    """
    Relative fluctuation threshold of the velocity estimate, widened as 1 / sqrt(horizon) below 10^5 slots.
    """

    return FLUCTUATION_THRESHOLD * max(1., np.sqrt(FLUCTUATION_REFERENCE_HORIZON / horizon))

def _velocity_params(params: SimParams, scale: float, stationary: bool) -> SimParams:
    size = max(100., 400. * min(scale, 1.))
    return params.copy(policy="power_control", L_x=size, L_y=size, guard=VELOCITY_GUARD,
                       horizon=velocity_horizon(params, scale), stationary_mode=stationary)

def run_to_horizon(params: SimParams, replication: int) -> tuple[PacketTrace, float]:
    """
    Traverse a strip long enough for the packet to reach the horizon.

    The strip starts at params.L_x. After a guard exit it is lengthened to twice the
    distance the observed velocity covers within the horizon, and the traversal is run again.

    Parameters
    ----------
    params : SimParams
        Traversal parameters.
    replication : int
        Replication index of the streams.

    Returns
    -------
    tuple[PacketTrace, float]
        Last trace and the length of its strip.
    """

    clock = "enhanced" if params.stationary_mode else "plain"
    length = float(params.L_x)
    for attempt in range(MAX_STRIP_EXTENSIONS + 1):
        trace = run_tagged_packet(params.copy(L_x=length), StreamSet(params.seed, replication))
        if trace.termination != "guard-exit" or attempt == MAX_STRIP_EXTENSIONS:
            break
        velocity, _ = information_velocity(trace, clock)
        next_length = max(2 * length, 2 * params.guard + 2 * velocity * params.horizon)
        logger.info("Guard exit after %d slots, strip lengthened from %g to %g.",
                    trace.elapsed(clock), length, next_length)
        length = next_length

    if trace.termination == "guard-exit":
        logger.warning("The packet still left the strip of length %g before the horizon.", length)
    return trace, length

def check_velocity(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Positive information velocity with a bootstrap interval excluding zero, measured up to the horizon.
    """

    velocity_params = _velocity_params(params, scale, stationary=False)
    trace, _ = run_to_horizon(velocity_params, 0)
    summary.add_check("velocity_horizon_reached", trace.elapsed(), velocity_params.horizon,
                      trace.termination == "horizon")

    velocity, series = information_velocity(trace)
    summary.add_check("velocity_positive", velocity, 0., velocity > 0)

    progress = np.array([hop.destination[0] - hop.source[0] for hop in trace.hops if not hop.censored])
    delays = trace.delays().astype(float)
    low, _ = bootstrap_ci((progress, delays), lambda x, t: np.sum(x) / np.sum(t),
                          rng=StreamSet(params.seed, 0).diagnostics)
    summary.add_check("velocity_ci_low", low, 0., low > 0)

    threshold = fluctuation_threshold(velocity_params.horizon)
    fluctuation = relative_fluctuation(series)
    summary.add_check("velocity_relative_fluctuation", fluctuation, threshold, fluctuation < threshold)

def check_stationarization(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Coupled enhanced delays dominate the real ones and are stationary. On paired replications
    sharing the strip, the stationary velocity is not above the plain one.
    """

    nb_pairs = _scaled(5, scale, 2)
    min_coupled_hops = _scaled(200, scale, 20)
    stationary_params = _velocity_params(params, scale, stationary=True)

    differences = []
    stationary_traces = []
    for replication in range(nb_pairs):
        stationary_trace, length = run_to_horizon(stationary_params, replication)
        plain_trace, plain_length = run_to_horizon(stationary_params.copy(L_x=length, stationary_mode=False), replication)
        if plain_length > length:
            stationary_trace = run_tagged_packet(stationary_params.copy(L_x=plain_length), StreamSet(params.seed, replication))
        stationary_traces.append(stationary_trace)

        v_stationary, _ = information_velocity(stationary_trace, "enhanced")
        v_plain, _ = information_velocity(plain_trace, "plain")
        differences.append(v_stationary - v_plain)

    coupled = [hop for trace in stationary_traces for hop in trace.hops if not hop.censored_prime]
    violations = sum(hop.T_prime < hop.T for hop in coupled)
    summary.add_check("enhanced_delay_dominance_violations", violations, 0,
                      violations == 0 and len(coupled) >= min_coupled_hops)

    enhanced = stationary_traces[0].delays("enhanced").astype(float)
    half = len(enhanced) // 2
    if half >= 20:
        overlap = intervals_overlap(
            batch_means_ci(enhanced[:half], nb_batches=10), batch_means_ci(enhanced[half:], nb_batches=10))
    else:
        logger.warning("Only %d enhanced delays, the stationarity check is skipped.", len(enhanced))
        overlap = False
    summary.add_check("enhanced_delay_halves_overlap", float(overlap), 1., overlap)

    # One sided test of a stationary velocity above the plain one
    differences = np.array(differences)
    if np.all(differences <= 0):
        p_value = 1.
    else:
        p_value = float(ttest_1samp(differences, 0., alternative="greater").pvalue)
    logger.info("Paired velocity differences: mean %g over %d pairs, p-value %g.",
                differences.mean(), nb_pairs, p_value)
    summary.add_check("stationary_velocity_below_plain", p_value, VELOCITY_TEST_LEVEL,
                      bool(p_value > VELOCITY_TEST_LEVEL))

def check_chernoff(params: SimParams, summary: ResultSummary, scale: float = 1.):
    """
    Empirical lower tail of the hop progress sums against exp(-zeta(delta) n), and existence
    of a threshold with zeta(delta) > g(0).
    """

    nb_chains = _scaled(10 ** 4, scale, 1000)
    xi = hop_progress_mean(params.intensity, params.m)
    delta = xi / 2
    zeta = chernoff_zeta(delta, params.intensity, params.m)

    rng = make_rng(params.seed, 0, CHECK_CHERNOFF)
    lengths, angles = sample_hop_chain(nb_chains * max(CHERNOFF_HOPS), params.intensity, params.m, rng)
    progress = (lengths * np.cos(angles)).reshape(nb_chains, max(CHERNOFF_HOPS))
    sums = np.cumsum(progress, axis=1)
    violations = 0
    for nb_hops in CHERNOFF_HOPS:
        frequency = float(np.mean(sums[:, nb_hops - 1] < nb_hops * delta))
        standard_error = np.sqrt((frequency * (1 - frequency) + 1 / nb_chains) / nb_chains)
        violations += frequency > np.exp(-zeta * nb_hops) + 3 * standard_error
    summary.add_check("chernoff_bound_violations", violations, 0, violations == 0)

    c1 = BoundInputs.from_params(params).c1
    g_zero = -4 * np.log1p(-c1)
    try:
        _, best_zeta = choose_delta(params.intensity, params.m, c1)
    except ArithmeticError:
        best_zeta = 0.
    summary.add_check("chernoff_delta_exists", best_zeta, g_zero, best_zeta > g_zero)

def check_determinism(params: SimParams, summary: ResultSummary, jobs: int = 1):
    """
    Identical exit time samples with one worker and with several.
    """

    nb_samples = 8
    sequential = _exit_time_samples(params, nb_samples, 1)
    parallel = _exit_time_samples(params, nb_samples, max(jobs, 2))
    nb_differences = int(np.sum(sequential[0] != parallel[0]) + np.sum(sequential[1] != parallel[1]))
    summary.add_check("determinism_differences", nb_differences, 0, nb_differences == 0)

def run_acceptance_suite(params: SimParams, scale: float = 1., jobs: int = 1) -> ResultSummary:
    """
    Run every acceptance check.

    Parameters
    ----------
    params : SimParams
        Base parameters, the policy and geometry are set by each check.
    scale : float, optional
        Factor applied to the sample sizes, by default 1.
    jobs : int, optional
        Number of worker processes for the exit time samples, by default 1

    Returns
    -------
    ResultSummary
        Summary whose checks are the acceptance results.
    """

    summary = ResultSummary("validate", params)
    logger.info("Running the acceptance suite at scale %g.", scale)

    check_nn_law(params, summary, scale)
    check_campbell_integral(summary)
    check_laplace_bound(params, summary, scale)
    check_geometric_tail(params, summary, scale)
    check_finiteness(params, summary, scale, jobs)
    check_aloha_contrast(params, summary, scale, jobs)
    check_velocity(params, summary, scale)
    check_stationarization(params, summary, scale)
    check_chernoff(params, summary, scale)
    for intensity in INTENSITIES:
        check_finiteness(params.copy(intensity=intensity), summary, scale, jobs, label=f"finiteness_lambda_{intensity:g}")
    check_determinism(params, summary, jobs)

    for check in summary.checks:
        log = logger.info if check["pass"] else logger.warning
        log("%s: %s (threshold %s) %s", check["check_name"], check["statistic"], check["threshold"],
            "passed" if check["pass"] else "FAILED")
    return summary
