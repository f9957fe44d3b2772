"""Sub-stream decomposition of d-matching source and code blocks.

Each position t >= M of a word is keyed by the pair (x, y) of the previous
M source letters and the previous M code letters; the first M letters of
every word belong to no pair.  Within one source state the letters are
i.i.d. P(X | x), so the matched blocks split into per-pair memoryless
streams whose lengths give the empirical coupling M(x, y).
"""

import dataclasses
import math

import numpy as np
import scipy.stats

from distortion import hamming
from errors import EmptyDecomposition, InsufficientData, LengthMismatchError
from markov_model import window_states
from rd_oracle import rpqd

DEFAULT_FLOOR = 100


@dataclasses.dataclass
class SubstreamDecomposition:
    """lengths and distortions are (|X|**M, |Y|**M) matrices; an unoccupied
    pair has length 0 and distortion nan.  pairs maps an occupied (x, y) to
    its (source letter, code letter) rows, costs to their letter distortions."""
    order: int
    lengths: np.ndarray
    distortions: np.ndarray
    pairs: dict = dataclasses.field(default_factory=dict)
    costs: dict = dataclasses.field(default_factory=dict)
    skipped: int = 0

    @property
    def total(self):
        return int(self.lengths.sum())

    @property
    def weights(self):
        if self.total == 0:
            raise EmptyDecomposition('no position was assigned to a sub-stream pair')
        return self.lengths / self.total

    def occupied(self):
        return [(int(x), int(y)) for x, y in zip(*np.nonzero(self.lengths))]

    def reconstructed_distortion(self):
        """Block distortion rebuilt from the per-pair streams."""
        if not self.costs:
            raise EmptyDecomposition('decomposition carries no letter costs')
        return math.fsum(np.concatenate([self.costs[pair] for pair in sorted(self.costs)])) / self.total

    def weighted_distortion(self):
        occupied = self.lengths > 0
        return float((self.weights[occupied] * self.distortions[occupied]).sum())


@dataclasses.dataclass
class Coupling:
    weights: np.ndarray
    x_given_y: np.ndarray
    y_given_x: np.ndarray


@dataclasses.dataclass
class SlopeReport:
    slopes: np.ndarray
    spread: float
    insufficient: list
    skipped: list

    def finite(self):
        return self.slopes[np.isfinite(self.slopes)]


def _split(block, boundaries):
    block = np.asarray(block, dtype=np.int64)
    if block.ndim == 2:
        return list(block)
    if boundaries is None:
        return [block]
    edges = [0] + list(boundaries) + [block.size]
    return [block[a:b] for a, b in zip(edges[:-1], edges[1:]) if b > a]


def decompose(source_block, code_block, M, measure=None, boundaries=None):
    """Split matched blocks into sub-stream pairs.

    A 2-D block is one word per row.  A 1-D block is one word unless
    `boundaries` lists the offsets where the concatenated words start
    (the first word's 0 omitted).  A 1-D block without boundaries is
    taken as a single word; it is not rejected as an unsplit
    concatenation.
    """
    source_words = _split(source_block, boundaries)
    code_words = _split(code_block, boundaries)
    if len(source_words) != len(code_words) or any(
            s.size != c.size for s, c in zip(source_words, code_words)):
        raise LengthMismatchError('source and code blocks differ in shape')
    if measure is None:
        top = max(int(max(w.max() for w in source_words)), int(max(w.max() for w in code_words)))
        measure = hamming(max(top + 1, 2))
    source_size = measure.source_size
    code_size = measure.reproduction_size

    xs, ys, letters, codes = [], [], [], []
    skipped = 0
    for source, code in zip(source_words, code_words):
        if source.size < M + 1:
            raise LengthMismatchError('word of {0} letters is shorter than M + 1 = {1}'.
                                      format(source.size, M + 1))
        xs.append(window_states(source, M, source_size)[:-1])
        ys.append(window_states(code, M, code_size)[:-1])
        letters.append(source[M:])
        codes.append(code[M:])
        skipped += M
    xs, ys = np.concatenate(xs), np.concatenate(ys)
    letters, codes = np.concatenate(letters), np.concatenate(codes)
    cost = measure.table[letters, codes]

    shape = (source_size ** M, code_size ** M)
    lengths = np.zeros(shape, dtype=np.int64)
    np.add.at(lengths, (xs, ys), 1)
    sums = np.zeros(shape)
    np.add.at(sums, (xs, ys), cost)
    with np.errstate(invalid='ignore', divide='ignore'):
        distortions = np.where(lengths > 0, sums / lengths, np.nan)

    pairs, costs = {}, {}
    for x, y in zip(*np.nonzero(lengths)):
        mask = (xs == x) & (ys == y)
        pairs[int(x), int(y)] = np.column_stack([letters[mask], codes[mask]])
        costs[int(x), int(y)] = cost[mask]
    return SubstreamDecomposition(M, lengths, distortions, pairs, costs, skipped)


def assigned_distortion(source_block, code_block, M, measure, boundaries=None):
    """Distortion over the positions decompose() assigns, straight from the blocks."""
    source_words = _split(source_block, boundaries)
    code_words = _split(code_block, boundaries)
    cost = np.concatenate([measure.table[s[M:], c[M:]] for s, c in zip(source_words, code_words)])
    return math.fsum(cost) / cost.size


def empirical_coupling(decomp):
    weights = decomp.weights
    column = weights.sum(axis=0, keepdims=True)
    row = weights.sum(axis=1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        x_given_y = np.where(column > 0, weights / column, 0.0)
        y_given_x = np.where(row > 0, weights / row, 0.0)
    return Coupling(weights, x_given_y, y_given_x)


def slope_diagnostic(decomp, source, Q, measure, floor=DEFAULT_FLOOR):
    """rpqd slope of every occupied pair at its empirical distortion.

    Pairs shorter than `floor` are listed in `insufficient`; pairs whose
    distortion does not exceed the pair's D_min have no finite slope and
    are listed in `skipped`.  Spread is max - min over the finite slopes.
    """
    Q = np.asarray(Q, dtype=float)
    slopes = np.full(decomp.lengths.shape, np.nan)
    insufficient, skipped = [], []
    for x, y in decomp.occupied():
        length = int(decomp.lengths[x, y])
        if length < floor:
            insufficient.append(InsufficientData(
                'pair ({0}, {1}) has {2} letters, fewer than {3}'.format(x, y, length, floor)))
            continue
        row, code = source.transitions[x], Q[y]
        d_xy = float(decomp.distortions[x, y])
        floor_xy = float(row @ np.where(code > 0, measure.table, np.inf).min(axis=1))
        if d_xy <= floor_xy:
            skipped.append((x, y))
            continue
        slopes[x, y] = rpqd(row, code, measure, d_xy).slope
    finite = slopes[np.isfinite(slopes)]
    spread = float(finite.max() - finite.min()) if finite.size else 0.0
    return SlopeReport(slopes, spread, insufficient, skipped)


def goodness_of_fit(decomp, source, x):
    """Chi-square p-value of the letters in source state x against P(X | x)."""
    streams = [decomp.pairs[pair][:, 0] for pair in sorted(decomp.pairs) if pair[0] == x]
    if not streams:
        raise EmptyDecomposition('source state {0} has no letters'.format(x))
    letters = np.concatenate(streams)
    expected = source.transitions[x] * letters.size
    support = expected > 0
    observed = np.bincount(letters, minlength=source.alphabet_size)
    return float(scipy.stats.chisquare(observed[support], expected[support]).pvalue)
