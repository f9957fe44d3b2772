"""Discrete M-th order Markov chains: validation, stationarity, sampling.

A state is the tuple of the M most recent letters.  The tuple
(x1, ..., xM), x1 oldest, has index sum(x_k * A**(M-k)), so the most recent
letter is least significant and the next state is (s * A + letter) % A**M.

transitions always has A**M rows and A columns: row s is the letter
distribution P(x | state s).  state_matrix() expands it to the
A**M x A**M state-to-state matrix.
"""

import configparser
import dataclasses
import functools
import math

import numpy as np
import scipy.linalg
from scipy.sparse import csgraph

from errors import LengthError, NonErgodicError, RowSumError

ROW_TOLERANCE = 1e-9
STATIONARY_TOLERANCE = 1e-10
DIRECT_SOLVE_LIMIT = 4096
POWER_TOLERANCE = 1e-12
POWER_MAX_ITERATIONS = 10 ** 6


@dataclasses.dataclass(frozen=True, eq=False)
class MarkovModel:
    alphabet_size: int
    order: int
    transitions: np.ndarray
    stationary: np.ndarray

    @property
    def n_states(self):
        return self.alphabet_size ** self.order

    def state_matrix(self):
        return state_matrix(self.transitions, self.alphabet_size, self.order)

    def letter_marginal(self):
        return block_distribution(self, 1)


def state_matrix(transitions, alphabet_size, order):
    """Expand letter rows P(x | s) into the state-to-state matrix."""
    n_states = alphabet_size ** order
    matrix = np.zeros((n_states, n_states))
    if order == 0:
        matrix[0, 0] = 1.0
        return matrix
    for state in range(n_states):
        successors = (state * alphabet_size + np.arange(alphabet_size)) % n_states
        matrix[state, successors] = transitions[state]
    return matrix


def letter_rows(matrix, alphabet_size, order):
    """Inverse of state_matrix: read P(x | s) off the successor columns."""
    n_states = alphabet_size ** order
    rows = np.empty((n_states, alphabet_size))
    for state in range(n_states):
        successors = (state * alphabet_size + np.arange(alphabet_size)) % n_states
        rows[state] = matrix[state, successors]
    return rows


def state_letters(state, alphabet_size, order):
    """Letters of a state index, oldest first."""
    letters = []
    for _ in range(order):
        letters.append(state % alphabet_size)
        state //= alphabet_size
    return letters[::-1]


def state_label(state, alphabet_size, order):
    return ''.join(str(letter) for letter in state_letters(state, alphabet_size, order))


def infer_order(n_rows, alphabet_size):
    if alphabet_size == 1:
        if n_rows != 1:
            raise RowSumError('a single-letter alphabet has exactly one state')
        return 0
    order = int(round(math.log(n_rows, alphabet_size)))
    if alphabet_size ** order != n_rows:
        raise RowSumError('{0} rows is not a power of the alphabet size {1}'.
                          format(n_rows, alphabet_size))
    return order


######################################################################
# Stationarity and ergodicity
######################################################################

def stationary_distribution(matrix):
    """Unique Pi with Pi = Pi P for a row-stochastic state matrix.

    Chains with transient states are fine as long as there is one closed
    class; anything with several stationary vectors (or, above the direct
    solve limit, no convergence) raises NonErgodicError.
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if n == 1:
        return np.ones(1)
    if n <= DIRECT_SOLVE_LIMIT:
        system = matrix.T - np.eye(n)
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        try:
            pi = scipy.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            raise NonErgodicError('no unique stationary distribution')
    else:
        pi = _power_iteration(matrix)
    if not np.all(np.isfinite(pi)) or pi.min() < -STATIONARY_TOLERANCE:
        raise NonErgodicError('no unique stationary distribution')
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.abs(pi @ matrix - pi).sum() >= STATIONARY_TOLERANCE:
        raise NonErgodicError('stationary residual above {0}'.format(STATIONARY_TOLERANCE))
    return pi


def _power_iteration(matrix):
    n = matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(POWER_MAX_ITERATIONS):
        following = pi @ matrix
        if np.abs(following - pi).sum() < POWER_TOLERANCE:
            return following
        pi = following
    raise NonErgodicError('power iteration did not settle; chain may be periodic or reducible')


def is_ergodic(matrix):
    """Irreducible (one strongly connected component of the positive
    transition digraph) and aperiodic (gcd of cycle lengths is 1)."""
    graph = np.asarray(matrix) > 0
    n = graph.shape[0]
    n_components = csgraph.connected_components(graph.astype(float), directed=True,
                                                connection='strong')[0]
    if n_components != 1:
        return False
    return _period(graph) == 1 if n > 1 else bool(graph[0, 0])


def _period(graph):
    # BFS levels from state 0; every edge u->v gives a cycle-length
    # difference level[u] + 1 - level[v].
    levels = csgraph.breadth_first_order(graph.astype(float), 0, directed=True,
                                         return_predecessors=True)
    order, predecessors = levels
    level = np.full(graph.shape[0], -1)
    level[0] = 0
    for node in order[1:]:
        level[node] = level[predecessors[node]] + 1
    sources, targets = np.nonzero(graph)
    gaps = np.abs(level[sources] + 1 - level[targets])
    return functools.reduce(math.gcd, (int(g) for g in gaps), 0)


def validate_model(transitions, alphabet_size=None, ergodic=True):
    """Check a letter-row transition matrix and build the model.

    alphabet_size defaults to the number of columns; the number of rows must
    be alphabet_size**order.  With ergodic=False only uniqueness of the
    stationary distribution is required (used for codebook chains).
    """
    transitions = np.array(transitions, dtype=float, ndmin=2)
    if transitions.ndim != 2:
        raise RowSumError('transitions must be a matrix')
    if alphabet_size is None:
        alphabet_size = transitions.shape[1]
    if transitions.shape[1] != alphabet_size or alphabet_size < 1:
        raise RowSumError('expected {0} columns, got {1}'.
                          format(alphabet_size, transitions.shape[1]))
    order = infer_order(transitions.shape[0], alphabet_size)
    if not np.all(np.isfinite(transitions)) or transitions.min() < 0:
        raise RowSumError('transition probabilities must be finite and nonnegative')
    sums = transitions.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > ROW_TOLERANCE)[0]
    if bad.size:
        raise RowSumError('row {0} sums to {1!r}'.format(int(bad[0]), float(sums[bad[0]])))
    transitions = transitions / sums[:, None]

    matrix = state_matrix(transitions, alphabet_size, order)
    if ergodic and not is_ergodic(matrix):
        raise NonErgodicError('chain is reducible or periodic')
    stationary = stationary_distribution(matrix)
    transitions.setflags(write=False)
    stationary.setflags(write=False)
    return MarkovModel(alphabet_size, order, transitions, stationary)


def memoryless(distribution):
    return validate_model(np.asarray(distribution, dtype=float)[None, :], ergodic=False)


def block_distribution(model, length):
    """Stationary probability of every `length`-tuple of letters, indexed
    like a state of that order."""
    size = model.alphabet_size
    order = model.order
    dist = np.array(model.stationary, dtype=float)
    width = order
    while width < length:
        context = np.arange(dist.size) % model.n_states
        dist = (dist[:, None] * model.transitions[context]).reshape(-1)
        width += 1
    if width > length:
        dist = dist.reshape(size ** length, size ** (width - length)).sum(axis=1)
    return dist


######################################################################
# Sampling
######################################################################

def _inverse_cdf(cdf, uniforms):
    # cdf rows may end a hair below 1 after cumsum; clip to the last letter.
    letters = (uniforms[..., None] >= cdf).sum(axis=-1)
    return np.minimum(letters, cdf.shape[-1] - 1)


def sample_words(model, count, length, rng):
    """count independent stationary words of `length` letters, shape (count, length)."""
    order = model.order
    size = model.alphabet_size
    if order >= 1 and length < order + 1:
        raise LengthError('word length {0} is shorter than order + 1 = {1}'.
                          format(length, order + 1))
    if length < 1:
        raise LengthError('word length must be positive')
    uniforms = rng.random((count, length))
    words = np.empty((count, length), dtype=np.int64)
    cdf = np.cumsum(model.transitions, axis=1)
    if order == 0:
        words[:] = _inverse_cdf(cdf[0], uniforms)
        return words

    start = _inverse_cdf(np.cumsum(model.stationary), uniforms[:, 0])
    state = start.copy()
    for position in range(order - 1, -1, -1):
        words[:, position] = state % size
        state //= size
    state = start
    for position in range(order, length):
        letters = _inverse_cdf(cdf[state], uniforms[:, position])
        words[:, position] = letters
        state = (state * size + letters) % model.n_states
    return words


def sample_word(model, length, rng):
    return sample_words(model, 1, length, rng)[0]


def window_states(words, order, alphabet_size, stride=1):
    """State index of every `order`-letter window along the last axis.

    stride=1 gives the overlapping windows a chain moves through; stride=order
    the non-overlapping super-symbols of a type.  order=0 yields state 0 for
    each of the length + 1 (empty) windows.
    """
    words = np.asarray(words, dtype=np.int64)
    span = words.shape[-1] - order + 1
    index = np.zeros(words.shape[:-1] + (len(range(0, span, stride)),), dtype=np.int64)
    for offset in range(order):
        index = index * alphabet_size + words[..., offset:offset + span:stride]
    return index


def state_occupancy(word, alphabet_size, order):
    """Empirical frequency of the M-letter windows of a word (stride 1)."""
    windows = window_states(word, order, alphabet_size)
    return np.bincount(windows, minlength=alphabet_size ** order) / windows.size


######################################################################
# Structured-text persistence
######################################################################

def format_matrix(matrix):
    return '\n' + '\n'.join(' '.join('{0:.17g}'.format(v) for v in row)
                            for row in np.atleast_2d(matrix))


def parse_matrix(text):
    rows = [line.replace(',', ' ').split() for line in text.replace(';', '\n').splitlines()]
    rows = [row for row in rows if row]
    return np.array([[float(v) for v in row] for row in rows])


def save_model(model, path):
    config = configparser.ConfigParser()
    config['model'] = {'alphabet_size': str(model.alphabet_size),
                       'order': str(model.order),
                       'transitions': format_matrix(model.transitions)}
    with open(path, 'w', newline='\n') as f:
        config.write(f)


def load_model(path, ergodic=True):
    config = configparser.ConfigParser()
    config.read(path)
    section = config['model']
    model = validate_model(parse_matrix(section['transitions']),
                           int(section['alphabet_size']), ergodic=ergodic)
    if model.order != int(section['order']):
        raise RowSumError('order {0} does not match {1} transition rows'.
                          format(section['order'], model.transitions.shape[0]))
    return model
