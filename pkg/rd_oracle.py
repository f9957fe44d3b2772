"""Deterministic rate-distortion oracle.

Every quantity here is exact up to root-finding tolerance and is used as
the reference for the stochastic NTS runs:

  rpqd                    R(P, Q, d) = min D(V || P x Q) over V with x-marginal P
                          and E rho <= d, together with its minimizer
  blahut_arimoto_rd       R(P, d) and Q*_{P,d}
  nts_deterministic_step  Q_{n+1} = Q*_{P, Q_n, d}, the large-L limit of one NTS step
  equal_slope_allocation  split d across sub-stream pairs at one common slope
  average_rate            cross-product rate of a fixed codebook chain
  alternating_min_markov  minimize the cross-product rate over the chain

The minimizer of D(V || P x Q) under the distortion constraint is the tilted
conditional W(y|x) = Q(y) exp(-lam rho(x,y)) / Z_x(lam), with lam >= 0 chosen
so the expected distortion equals d; its divergence is
-lam d - sum_x P(x) log Z_x(lam).  Rates are nats internally; *_bits
helpers convert for reporting.
"""

import dataclasses
import math

import numpy as np
import scipy.optimize
import scipy.special

from distortion import DistortionMeasure, block_order, source_blocks, supersymbol_measure
from errors import InfeasibleDistortion, NonConvergence, RangeError
from markov_model import (MarkovModel, block_distribution, state_matrix,
                          stationary_distribution)

LAMBDA_MAX = 1e4
DISTORTION_TOLERANCE = 1e-9
BISECTION_STEPS = 200
BA_MAX_ITERATIONS = 10 ** 5


def to_bits(nats):
    return nats / math.log(2)


def divergence(p, q):
    """D(p || q) in nats; +inf when p is not absolutely continuous w.r.t. q."""
    return float(scipy.special.rel_entr(np.asarray(p, dtype=float),
                                        np.asarray(q, dtype=float)).sum())


def binary_entropy(p, base=2):
    if p <= 0 or p >= 1:
        return 0.0
    return float(scipy.special.entr([p, 1 - p]).sum() / math.log(base))


@dataclasses.dataclass
class JointDistribution:
    v: np.ndarray

    def x_marginal(self):
        return self.v.sum(axis=1)

    def y_marginal(self):
        return self.v.sum(axis=0)


@dataclasses.dataclass
class RdPoint:
    rate: float
    distortion: float
    slope: float
    minimizer: JointDistribution
    output_distribution: np.ndarray

    @property
    def rate_bits(self):
        return to_bits(self.rate)


######################################################################
# Tilted conditionals
######################################################################

def _log(q):
    with np.errstate(divide='ignore'):
        return np.log(q)


def _tilt(log_q, table, lam):
    """W(y|x) and log Z_x for every row; log_q broadcasts against table."""
    logits = log_q - lam * table
    log_z = scipy.special.logsumexp(logits, axis=-1)
    return np.exp(logits - log_z[..., None]), log_z


def _solve_slope(excess):
    """lam in [0, LAMBDA_MAX] with excess(lam) = 0; excess is non-increasing
    and positive at 0."""
    high = excess(LAMBDA_MAX)
    if high > DISTORTION_TOLERANCE:
        raise NonConvergence('distortion target not reached for slope <= {0}'.
                             format(LAMBDA_MAX))
    if high >= 0:
        return LAMBDA_MAX
    return scipy.optimize.brentq(excess, 0.0, LAMBDA_MAX, xtol=1e-14,
                                 maxiter=BISECTION_STEPS)


def rpqd(P, Q, measure, d):
    """Output-constrained rate R(P, Q, d).

    P may be a distribution over X**M or a MarkovModel; the super-symbol
    order is read off the length of Q."""
    P, Q, table = source_blocks(P, Q, measure)
    support = Q > 0
    floor = float(P @ table[:, support].min(axis=1))
    if d <= floor:
        raise RangeError('d = {0!r} is not above D_min = {1!r}'.format(d, floor))
    log_q = _log(Q)
    average = float(P @ table @ Q)
    if d >= average:
        lam = 0.0
    else:
        lam = _solve_slope(lambda s: float(P @ (_tilt(log_q, table, s)[0] * table).sum(axis=1)) - d)
    conditional, log_z = _tilt(log_q, table, lam)
    distortion = float(P @ (conditional * table).sum(axis=1))
    rate = max(0.0, -lam * distortion - float(P @ log_z))
    joint = P[:, None] * conditional
    return RdPoint(rate, distortion, lam, JointDistribution(joint), joint.sum(axis=0))


def zero_rate_point(P, table):
    """Best constant reproduction: rate 0 at d_max."""
    costs = P @ table
    best = int(np.argmin(costs))
    output = np.zeros(table.shape[1])
    output[best] = 1.0
    return RdPoint(0.0, float(costs[best]), 0.0,
                   JointDistribution(P[:, None] * output[None, :]), output)


def blahut_arimoto_rd(P, measure, d, tol=1e-12, max_iterations=BA_MAX_ITERATIONS,
                      initial=None, history=None):
    """R(P, d) by the fixed-distortion alternating recursion.

    Q <- y-marginal of the tilted joint, lam re-solved each step so the
    distortion stays at d.  Stops when successive rates differ by < tol.
    `history`, if given, receives (Q, rate) per step.
    """
    if initial is None:
        order = 1
        if not isinstance(P, MarkovModel):
            order = block_order(measure.source_size, np.asarray(P).size)
        n_blocks = measure.reproduction_size ** order
        initial = np.full(n_blocks, 1.0 / n_blocks)
    P, Q, table = source_blocks(P, initial, measure)
    if d >= float((P @ table).min()):
        return zero_rate_point(P, table)

    blocks = DistortionMeasure(table, measure.name)
    previous = math.inf
    for _ in range(max_iterations):
        point = rpqd(P, Q, blocks, d)
        if history is not None:
            history.append((Q, point.rate))
        if abs(previous - point.rate) < tol:
            return point
        previous = point.rate
        Q = point.output_distribution
    raise NonConvergence('rate still moving after {0} iterations'.format(max_iterations))


def nts_deterministic_step(P, Q, measure, d):
    Q = np.asarray(Q, dtype=float)
    if Q.size == 1:
        return Q.copy()
    return rpqd(P, Q, measure, d).output_distribution


######################################################################
# Sub-stream pairs
######################################################################

@dataclasses.dataclass
class Allocation:
    """Equal-slope split of d across pairs (one entry per pair, flat)."""
    weights: np.ndarray
    distortions: np.ndarray
    rates: np.ndarray
    slope: float
    conditionals: np.ndarray
    outputs: np.ndarray

    @property
    def average_rate(self):
        return float(self.weights @ self.rates)

    @property
    def average_distortion(self):
        return float(self.weights @ self.distortions)


def equal_slope_allocation(pairs, measure, d):
    """pairs: iterable of (P(X|x), Q(Y|y), weight M(x,y)).

    Finds the common slope lam with sum M(x,y) d_{x,y}(lam) = d, where each
    d_{x,y}(lam) is the distortion of that pair's tilted conditional.
    """
    pairs = list(pairs)
    source_rows = np.array([np.asarray(p, dtype=float) for p, _, _ in pairs])
    code_rows = np.array([np.asarray(q, dtype=float) for _, q, _ in pairs])
    weights = np.array([float(w) for _, _, w in pairs])
    table = np.asarray(measure.table)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise InfeasibleDistortion('pair weights sum to {0!r}'.format(weights.sum()))

    log_q = _log(code_rows)[:, None, :]
    masked = np.where(code_rows[:, None, :] > 0, table[None, :, :], np.inf)
    floors = (source_rows * masked.min(axis=2)).sum(axis=1)
    if float(weights @ floors) >= d:
        raise InfeasibleDistortion('d = {0!r} is not above the weighted D_min {1!r}'.
                                   format(d, float(weights @ floors)))

    def pair_distortions(lam):
        conditional = _tilt(log_q, table[None, :, :], lam)[0]
        return (source_rows * (conditional * table[None, :, :]).sum(axis=2)).sum(axis=1)

    if float(weights @ pair_distortions(0.0)) <= d:
        lam = 0.0
    else:
        lam = _solve_slope(lambda s: float(weights @ pair_distortions(s)) - d)
    conditionals, log_z = _tilt(log_q, table[None, :, :], lam)
    distortions = (source_rows * (conditionals * table[None, :, :]).sum(axis=2)).sum(axis=1)
    rates = np.maximum(0.0, -lam * distortions - (source_rows * log_z).sum(axis=1))
    outputs = (source_rows[:, :, None] * conditionals).sum(axis=1)
    return Allocation(weights, distortions, rates, lam, conditionals, outputs)


def product_weights(source, code_rows):
    """M(x, y) = pi_P(x) pi_Q(y) over source states x and code states y."""
    code_order = source.order
    size = code_rows.shape[1]
    pi_code = stationary_distribution(state_matrix(code_rows, size, code_order))
    return np.outer(source.stationary, pi_code)


def _pairs(source, code_rows, weights):
    for x in range(source.n_states):
        for y in range(code_rows.shape[0]):
            yield source.transitions[x], code_rows[y], weights[x, y]


def average_rate(source, code_rows, measure, d, weights=None):
    """Cross-product rate sum M(x,y) R(P(X|x), Q(Y|y), d*_{x,y}) in nats
    for a fixed codebook chain, with its allocation."""
    code_rows = np.asarray(code_rows, dtype=float)
    if weights is None:
        weights = product_weights(source, code_rows)
    allocation = equal_slope_allocation(_pairs(source, code_rows, weights), measure, d)
    return allocation.average_rate, allocation


@dataclasses.dataclass
class AlternatingResult:
    conditionals: np.ndarray
    rate: float
    history: list
    allocation: Allocation
    iterations: int

    @property
    def rate_bits(self):
        return to_bits(self.rate)


def alternating_min_markov(source, measure, d, weights_mode='product', weights=None,
                           initial=None, tol=1e-13, q_tol=1e-9,
                           max_iterations=BA_MAX_ITERATIONS, path=None):
    """Alternate between the pair joints (equal-slope allocation for fixed
    Q(Y|y)) and the chain (Q(Y|y) <- y-marginal of sum_x M(x|y) V_{x,y}).

    Codebook order equals the source order.  weights_mode 'product'
    recomputes M(x,y) = pi_P(x) pi_Q(y) each round; 'fixed' uses `weights`.
    Stops once the rate moves by < tol and the rows by < q_tol.
    `path`, if given, receives (rows, rate) per round.
    """
    size = measure.reproduction_size
    n_code_states = size ** source.order
    if initial is None:
        initial = np.full((n_code_states, size), 1.0 / size)
    code_rows = np.array(initial, dtype=float)
    if weights_mode == 'fixed':
        if weights is None:
            raise ValueError("weights_mode 'fixed' needs a weights matrix")
        weights = np.asarray(weights, dtype=float)
    elif weights_mode != 'product':
        raise ValueError('unknown weights_mode {0!r}'.format(weights_mode))

    history = []
    for iteration in range(1, max_iterations + 1):
        current = product_weights(source, code_rows) if weights_mode == 'product' else weights
        rate, allocation = average_rate(source, code_rows, measure, d, current)
        history.append(rate)
        if path is not None:
            path.append((code_rows, rate))

        outputs = allocation.outputs.reshape(source.n_states, n_code_states, size)
        column = current.sum(axis=0)
        updated = code_rows.copy()
        occupied = column > 0
        given_y = current[:, occupied] / column[occupied]
        updated[occupied] = np.einsum('xy,xya->ya', given_y, outputs[:, occupied, :])
        updated /= updated.sum(axis=1, keepdims=True)

        settled = len(history) > 1 and abs(history[-2] - rate) < tol
        if settled and np.abs(updated - code_rows).max() < q_tol:
            return AlternatingResult(code_rows, rate, history, allocation, iteration)
        code_rows = updated
    raise NonConvergence('alternating minimization still moving after {0} rounds'.
                         format(max_iterations))


def iid_reference(source, measure, order, d):
    """R(P_M, d) per super-symbol for the block distribution of `source`."""
    P = block_distribution(source, order)
    return blahut_arimoto_rd(P, supersymbol_measure(measure, order), d)
