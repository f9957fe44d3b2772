"""Natural type selection runs.

Three recursions share one loop (run_iterations): each iteration d-matches
K source words against lazily generated codebooks drawn from the current
distribution, then replaces the distribution with an estimate built from the
K accepted codewords.

  nts_original_run   M = 1, K = 1: adopt the type of the matching codeword
  nts_modified_run   average of the K matching codewords' M-th order types
  nts_markov_run     ML transition matrix from the K matching codewords

Match k of iteration n uses the codebook keyed by (master_seed, n, k), so
the K searches are independent and may run on any number of workers.
"""

import concurrent.futures
import dataclasses
import datetime
import math
import time

import numpy as np

import seeding
from codebook import DEFAULT_CAP, DEFAULT_CHUNK, iid_codebook, markov_codebook
from codebook import d_match_search
from errors import DegenerateType, DivisibilityError, EmptyRowError, Exhausted, InvalidK
from errors import LengthError, LengthMismatchError
from markov_model import letter_rows, sample_word, validate_model, window_states

NORMALIZATION_TOLERANCE = 1e-12


@dataclasses.dataclass
class MType:
    probabilities: np.ndarray
    denominator: int


@dataclasses.dataclass
class TransitionCounts:
    counts: np.ndarray
    alphabet_size: int
    order: int

    @property
    def total_from(self):
        return self.counts.sum(axis=1)

    def __add__(self, other):
        return TransitionCounts(self.counts + other.counts, self.alphabet_size, self.order)

    def successors(self, state):
        n_states = self.counts.shape[0]
        return (state * self.alphabet_size + np.arange(self.alphabet_size)) % n_states


@dataclasses.dataclass
class TraceRecord:
    iteration: int
    distribution: np.ndarray
    mean_match_index: float = math.nan
    mean_distortion: float = math.nan
    oracle_rate: float = None
    wall_ms: float = 0.0
    matches: tuple = None


@dataclasses.dataclass
class NtsTrace:
    algorithm: str
    alphabet_size: int
    order: int
    records: list = dataclasses.field(default_factory=list)

    @property
    def final(self):
        return self.records[-1].distribution

    def distributions(self):
        return [record.distribution for record in self.records]


######################################################################
# Types and transition counts
######################################################################

def m_type(y, M, alphabet_size):
    """Type of the non-overlapping M-blocks of a codeword."""
    y = np.asarray(y, dtype=np.int64)
    if M < 1 or y.size % M:
        raise DivisibilityError('word of {0} letters does not split into blocks of {1}'.
                                format(y.size, M))
    blocks = window_states(y, M, alphabet_size, stride=M)
    counts = np.bincount(blocks, minlength=alphabet_size ** M)
    return MType(counts / blocks.size, blocks.size)


def transition_counts(y, M, alphabet_size):
    """State transitions of one word, windows advancing one letter at a time."""
    return transition_counts_many(np.asarray(y)[None, :], M, alphabet_size)


def transition_counts_many(words, M, alphabet_size):
    words = np.asarray(words, dtype=np.int64)
    if M < 1:
        raise ValueError('transition counting needs order M >= 1')
    if words.shape[-1] < M + 1:
        raise LengthError('word of {0} letters has no transition at order {1}'.
                          format(words.shape[-1], M))
    n_states = alphabet_size ** M
    states = window_states(words, M, alphabet_size)
    pairs = (states[:, :-1] * n_states + states[:, 1:]).reshape(-1)
    counts = np.bincount(pairs, minlength=n_states * n_states).reshape(n_states, n_states)
    return TransitionCounts(counts, alphabet_size, M)


def ml_transition_update(counts, smoothing=0.0):
    """Q_{j|i} = (N(i->j) + eps) / (N(i) + eps * |succ(i)|).

    Smoothing is spread over the feasible successors of each state (all of
    S when M = 1).  With eps = 0 an unvisited state raises EmptyRowError.
    """
    n_states = counts.counts.shape[0]
    matrix = np.zeros((n_states, n_states))
    for state in range(n_states):
        successors = counts.successors(state)
        row = counts.counts[state, successors].astype(float) + smoothing
        total = row.sum()
        if total <= 0:
            raise EmptyRowError(state)
        matrix[state, successors] = row / total
    return matrix


def average_type(types, smoothing=0.0):
    """Mean of K types, floored to (t + eps) / (1 + eps |S|)."""
    mean = np.mean([t.probabilities for t in types], axis=0)
    return (mean + smoothing) / (1.0 + smoothing * mean.size)


######################################################################
# The shared iteration loop
######################################################################

def _say(verbose, tag, message):
    if verbose:
        print('{0} {1}: {2}'.format(tag, datetime.datetime.now(), message))


def _match_all(n, words, spec, d, measure, cap, workers):
    def one(k):
        try:
            return d_match_search(words[k - 1], spec.for_match(n, k), d, measure, cap)
        except Exhausted as e:
            raise e.at(n, k)

    indices = range(1, len(words) + 1)
    if workers <= 1:
        return [one(k) for k in indices]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(one, indices))


def run_iterations(algorithm, n_iterations, initial, make_spec, words_for, update,
                   d, measure, cap=DEFAULT_CAP, oracle=None, workers=1,
                   keep_matches=False, verbose=False, debug=False, tag='nts'):
    """Generic NTS loop.

    make_spec(distribution) builds the codebook for an iteration,
    words_for(n) returns the K source words of iteration n, and
    update(codewords) returns the next distribution.
    """
    distribution = initial
    probe = make_spec(distribution)
    trace = NtsTrace(algorithm, probe.alphabet_size, probe.order)
    trace.records.append(TraceRecord(0, distribution, oracle_rate=_rate(oracle, distribution)))
    for n in range(1, n_iterations + 1):
        started = time.perf_counter()
        spec = make_spec(distribution)
        words = words_for(n)
        matches = _match_all(n, words, spec, d, measure, cap, workers)
        if debug:
            for k, record in enumerate(matches, 1):
                print('{0} iteration {1} match {2}: index {3} distortion {4:.6g}'.
                      format(tag, n, k, record.index, record.distortion))
        codewords = np.array([record.codeword for record in matches])
        distribution = update(codewords)
        record = TraceRecord(
            n, distribution,
            float(np.mean([m.index for m in matches])),
            float(np.mean([m.distortion for m in matches])),
            _rate(oracle, distribution),
            (time.perf_counter() - started) * 1000.0,
            (np.array(words), codewords) if keep_matches else None)
        trace.records.append(record)
        _say(verbose, tag, 'iteration {0} mean match index {1:.1f}'.
             format(n, record.mean_match_index))
    return trace


def _rate(oracle, distribution):
    return None if oracle is None else oracle(distribution)


######################################################################
# The three recursions
######################################################################

def _iid_run(algorithm, source_words, measure, M, L, K, d, Q0, master_seed, cap,
             smoothing, chunk_size, strict_type, **options):
    if K < 1:
        raise InvalidK('statistical depth K must be at least 1, got {0}'.format(K))
    source_words = np.asarray(source_words, dtype=np.int64)
    if source_words.shape[0] % K:
        raise InvalidK('{0} source words do not split into iterations of K = {1}'.
                       format(source_words.shape[0], K))
    size = measure.reproduction_size

    def make_spec(distribution):
        return iid_codebook(distribution, L, size, M, master_seed=master_seed,
                            chunk_size=chunk_size)

    def words_for(n):
        return source_words[(n - 1) * K:n * K]

    def update(codewords):
        types = [m_type(word, M, size) for word in codewords]
        if strict_type and smoothing == 0 and size > 1 and np.any(types[0].probabilities == 0):
            raise DegenerateType('adopted type {0} has empty letters'.
                                 format(types[0].probabilities.tolist()))
        return average_type(types, smoothing)

    return run_iterations(algorithm, source_words.shape[0] // K,
                          np.asarray(Q0, dtype=float), make_spec, words_for, update,
                          d, measure, cap, **options)


def nts_original_run(source_words, measure, L, d, Q0, master_seed=0, cap=DEFAULT_CAP,
                     smoothing=0.0, chunk_size=DEFAULT_CHUNK, **options):
    """One source word per iteration; the next distribution is the type of
    the first d-matching codeword (floored by `smoothing` when > 0)."""
    return _iid_run('original', source_words, measure, 1, L, 1, d, Q0, master_seed,
                    cap, smoothing, chunk_size, True, **options)


def nts_modified_run(source_words, measure, M, L, K, d, Q0, master_seed=0,
                     cap=DEFAULT_CAP, smoothing=0.0, chunk_size=DEFAULT_CHUNK, **options):
    return _iid_run('modified', source_words, measure, M, L, K, d, Q0, master_seed,
                    cap, smoothing, chunk_size, False, **options)


def nts_markov_run(source, measure, M, L, K, N, d, Q0, master_seed=0, cap=DEFAULT_CAP,
                   smoothing=1e-3, chunk_size=DEFAULT_CHUNK, source_words=None, **options):
    """Markov codebook chain re-estimated by ML from the matching codewords.

    Q0 and every traced distribution are letter rows Q(Y | state), shape
    (|Y|**M, |Y|).  Source words are drawn fresh for each (n, k) unless
    `source_words` (K*N rows of L letters) is given.
    """
    if K < 1:
        raise InvalidK('statistical depth K must be at least 1, got {0}'.format(K))
    size = measure.reproduction_size
    if L < M + 1:
        raise LengthError('word length {0} is shorter than M + 1 = {1}'.format(L, M + 1))
    Q0 = np.array(Q0, dtype=float, ndmin=2)
    if size > 1 and Q0.shape != (size ** M, size):
        raise LengthMismatchError('Q0 has shape {0}, order {1} needs {2}'.
                                  format(Q0.shape, M, (size ** M, size)))

    def make_spec(rows):
        model = validate_model(rows, size, ergodic=False)
        return markov_codebook(model, L, master_seed=master_seed, chunk_size=chunk_size)

    def words_for(n):
        if source_words is not None:
            return np.asarray(source_words[(n - 1) * K:n * K], dtype=np.int64)
        return np.array([sample_word(source, L, seeding.stream(
            master_seed, n, k, seeding.Role.SOURCE)) for k in range(1, K + 1)])

    def update(codewords):
        counts = transition_counts_many(codewords, M, size)
        return letter_rows(ml_transition_update(counts, smoothing), size, M)

    return run_iterations('markov', N, Q0, make_spec,
                          words_for, update, d, measure, cap, **options)


def sample_source_words(source, count, length, master_seed, K):
    """Independent source words for the i.i.d. runners, word i belonging to
    iteration i // K + 1 and match i % K + 1."""
    return np.array([sample_word(source, length, seeding.stream(
        master_seed, i // K + 1, i % K + 1, seeding.Role.SOURCE)) for i in range(count)])


def is_normalized(distribution):
    sums = np.atleast_2d(distribution).sum(axis=1)
    return bool(np.all(np.abs(sums - 1.0) < NORMALIZATION_TOLERANCE))
