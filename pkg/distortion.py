"""Letter distortion tables and the distortion-range quantities.

Only the letter table is stored.  Vector (super-symbol) distortion is the
per-letter average and is computed from it on demand by block_table().
"""

import configparser
import dataclasses
import math

import numpy as np

from errors import LengthMismatchError
from markov_model import MarkovModel, block_distribution, format_matrix, parse_matrix


@dataclasses.dataclass(frozen=True, eq=False)
class DistortionMeasure:
    table: np.ndarray
    name: str = 'table'

    def __post_init__(self):
        table = np.array(self.table, dtype=float, ndmin=2)
        if table.ndim != 2 or not np.all(np.isfinite(table)) or table.min() < 0:
            raise ValueError('distortion table must be a finite nonnegative matrix')
        table.setflags(write=False)
        object.__setattr__(self, 'table', table)

    @property
    def source_size(self):
        return self.table.shape[0]

    @property
    def reproduction_size(self):
        return self.table.shape[1]


def hamming(size, reproduction_size=None):
    reproduction_size = reproduction_size or size
    table = 1.0 - np.eye(size, reproduction_size)
    return DistortionMeasure(table, 'hamming')


def block_table(measure, length):
    """rho_M(x, y) = (1/M) sum_k rho(x_k, y_k) over M-tuples indexed as states."""
    if length == 1:
        return np.array(measure.table)
    a, b = measure.table.shape
    total = np.zeros((1, 1))
    for _ in range(length):
        total = (total[:, None, :, None] + measure.table[None, :, None, :]).reshape(
            total.shape[0] * a, total.shape[1] * b)
    return total / length


def supersymbol_measure(measure, length):
    """The measure over M-tuples, as its own letter table."""
    if length == 1:
        return measure
    return DistortionMeasure(block_table(measure, length), measure.name)


def block_order(size, n_blocks):
    if size == 1 or n_blocks == 1:
        return 1
    order = int(round(math.log(n_blocks, size)))
    if size ** order != n_blocks:
        raise LengthMismatchError('{0} entries is not a power of {1}'.format(n_blocks, size))
    return order


def source_blocks(P, Q, measure):
    """Resolve P (distribution or model) and the block table matching Q."""
    Q = np.asarray(Q, dtype=float)
    order = block_order(measure.reproduction_size, Q.size)
    if isinstance(P, MarkovModel):
        P = block_distribution(P, order)
    P = np.asarray(P, dtype=float)
    table = block_table(measure, order)
    if table.shape != (P.size, Q.size):
        raise LengthMismatchError('table {0} does not fit P[{1}] x Q[{2}]'.
                                  format(table.shape, P.size, Q.size))
    return P, Q, table


######################################################################
# Word level
######################################################################

def word_distortion(x, y, measure):
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape:
        raise LengthMismatchError('words of length {0} and {1}'.format(x.size, y.size))
    return float(measure.table[x, y].sum() / x.size)


def words_distortion(x, words, measure):
    """Distortion of one source word against each row of `words`."""
    return measure.table[x[None, :], words].sum(axis=1) / x.size


######################################################################
# Distribution level
######################################################################

def d_av(P, Q, measure):
    P, Q, table = source_blocks(P, Q, measure)
    return float(P @ table @ Q)


def d_min(P, Q, measure):
    P, Q, table = source_blocks(P, Q, measure)
    support = Q > 0
    return float(P @ table[:, support].min(axis=1))


def d_max(P, measure):
    """Best constant reproduction letter: min_y sum_x pi(x) rho(x, y)."""
    if isinstance(P, MarkovModel):
        P = block_distribution(P, 1)
    return float((np.asarray(P, dtype=float) @ measure.table).min())


def in_operating_range(P, Q, measure, d):
    return d_min(P, Q, measure) < d < d_av(P, Q, measure)


######################################################################
# Structured-text persistence
######################################################################

def save_measure(measure, path):
    config = configparser.ConfigParser()
    config['measure'] = {'name': measure.name, 'table': format_matrix(measure.table)}
    with open(path, 'w', newline='\n') as f:
        config.write(f)


def load_measure(path):
    config = configparser.ConfigParser()
    config.read(path)
    section = config['measure']
    return DistortionMeasure(parse_matrix(section['table']), section.get('name', 'table'))
