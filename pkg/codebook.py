"""Lazy random codebooks and the d-match search.

No codebook is ever materialized.  Codewords are produced in chunks of
`chunk_size`; chunk c of the codebook for (iteration, match) is drawn from
its own generator keyed by (master, iteration, match, CODEBOOK, c),
so codeword j is a pure function of the spec and j.
"""

import concurrent.futures
import dataclasses

import numpy as np

import seeding
from distortion import words_distortion
from errors import Exhausted
from markov_model import MarkovModel, sample_words

IID = 'iid-supersymbol'
MARKOV = 'markov'

DEFAULT_CAP = 10 ** 7
DEFAULT_CHUNK = 256


@dataclasses.dataclass(frozen=True, eq=False)
class CodebookSpec:
    """mode IID: `distribution` is Q_M over Y**M and a codeword is `length`
    super-symbols (order * length letters).  mode MARKOV: `distribution` is
    a MarkovModel over Y and a codeword is `length` letters."""
    mode: str
    distribution: object
    length: int
    alphabet_size: int
    order: int = 1
    master_seed: int = 0
    iteration: int = 0
    match: int = 0
    chunk_size: int = DEFAULT_CHUNK

    @property
    def letters(self):
        return self.length * self.order if self.mode == IID else self.length

    def for_match(self, iteration, match):
        return dataclasses.replace(self, iteration=iteration, match=match)


@dataclasses.dataclass
class MatchRecord:
    index: int
    codeword: np.ndarray
    distortion: float
    search_cost: int


def iid_codebook(distribution, length, alphabet_size, order=1, **kwargs):
    distribution = np.asarray(distribution, dtype=float)
    return CodebookSpec(IID, distribution, length, alphabet_size, order, **kwargs)


def markov_codebook(model, length, **kwargs):
    return CodebookSpec(MARKOV, model, length, model.alphabet_size, model.order, **kwargs)


def _expand_supersymbols(blocks, alphabet_size, order):
    # super-symbol index -> its `order` letters, oldest (most significant) first
    letters = np.empty(blocks.shape + (order,), dtype=np.int64)
    rest = blocks.copy()
    for position in range(order - 1, -1, -1):
        letters[..., position] = rest % alphabet_size
        rest //= alphabet_size
    return letters.reshape(blocks.shape[0], -1)


def chunk(spec, index, count=None):
    """Codewords chunk_size*index+1 .. chunk_size*(index+1), one per row."""
    count = spec.chunk_size if count is None else count
    rng = seeding.stream(spec.master_seed, spec.iteration, spec.match,
                         seeding.Role.CODEBOOK, index)
    if spec.mode == MARKOV:
        return sample_words(spec.distribution, spec.chunk_size, spec.length, rng)[:count]
    cdf = np.cumsum(spec.distribution)
    uniforms = rng.random((spec.chunk_size, spec.length))
    blocks = np.minimum((uniforms[..., None] >= cdf).sum(axis=-1), cdf.size - 1)
    return _expand_supersymbols(blocks[:count], spec.alphabet_size, spec.order)


def codeword_at(spec, j):
    if j < 1:
        raise ValueError('codeword indices start at 1')
    block, offset = divmod(j - 1, spec.chunk_size)
    return chunk(spec, block)[offset]


def d_match_search(x, spec, d, measure, cap=DEFAULT_CAP, workers=1):
    """First codeword j <= cap with rho(x, codeword j) <= d.

    With workers > 1, `workers` consecutive chunks are generated
    concurrently; the reported match is still the smallest index.
    """
    x = np.asarray(x, dtype=np.int64)
    if x.size != spec.letters:
        raise ValueError('source word has {0} letters, codewords have {1}'.
                         format(x.size, spec.letters))
    n_chunks = -(-cap // spec.chunk_size)
    executor = None
    if workers > 1:
        executor = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    try:
        block = 0
        while block < n_chunks:
            batch = range(block, min(block + max(workers, 1), n_chunks))
            if executor is None:
                found = [_scan(x, spec, d, measure, cap, b) for b in batch]
            else:
                found = list(executor.map(lambda b: _scan(x, spec, d, measure, cap, b), batch))
            for record in found:
                if record is not None:
                    return record
            block = batch[-1] + 1
    finally:
        if executor is not None:
            executor.shutdown()
    raise Exhausted(cap)


def _scan(x, spec, d, measure, cap, block):
    first = block * spec.chunk_size
    words = chunk(spec, block, min(spec.chunk_size, cap - first))
    distortions = words_distortion(x, words, measure)
    hits = np.flatnonzero(distortions <= d)
    if hits.size == 0:
        return None
    hit = int(hits[0])
    index = first + hit + 1
    return MatchRecord(index, words[hit].copy(), float(distortions[hit]), index)


def is_strictly_positive(spec):
    if isinstance(spec.distribution, MarkovModel):
        return bool(np.all(spec.distribution.transitions > 0))
    return bool(np.all(np.asarray(spec.distribution) > 0))
