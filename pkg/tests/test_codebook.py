import numpy as np
import pytest
from scipy import stats

from codebook import (chunk, codeword_at, d_match_search, iid_codebook, is_strictly_positive,
                      markov_codebook)
from distortion import hamming, word_distortion
from errors import Exhausted
from markov_model import validate_model
from nts_algorithms import m_type


def spec(distribution=(0.5, 0.5), length=20, order=1, **kwargs):
    kwargs.setdefault('master_seed', 17)
    return iid_codebook(distribution, length, 2, order, **kwargs).for_match(1, 1)


def test_codeword_is_a_pure_function_of_index():
    s = spec(chunk_size=4)
    np.testing.assert_array_equal(codeword_at(s, 7), codeword_at(s, 7))
    np.testing.assert_array_equal(codeword_at(s, 7), chunk(s, 1)[2])


def test_codebooks_differ_between_matches():
    s = spec()
    assert not np.array_equal(chunk(s, 0), chunk(s.for_match(1, 2), 0))
    assert not np.array_equal(chunk(s, 0), chunk(s.for_match(2, 1), 0))


def test_index_must_be_positive():
    with pytest.raises(ValueError):
        codeword_at(spec(), 0)


def test_point_mass_gives_constant_codeword():
    s = spec((0.0, 1.0), length=6)
    np.testing.assert_array_equal(codeword_at(s, 3), np.ones(6, dtype=int))


def test_supersymbols_expand_oldest_letter_first():
    s = spec((0.0, 1.0, 0.0, 0.0), length=3, order=2)
    np.testing.assert_array_equal(codeword_at(s, 1), [0, 1, 0, 1, 0, 1])


def test_codeword_types_follow_distribution():
    s = spec((0.7, 0.3), length=100, chunk_size=1000)
    words = np.concatenate([chunk(s, b) for b in range(10)])
    types = np.mean([m_type(w, 1, 2).probabilities for w in words], axis=0)
    np.testing.assert_allclose(types, [0.7, 0.3], atol=0.01)


def test_every_codeword_matches_at_max_distortion():
    s = spec()
    x = np.zeros(20, dtype=int)
    record = d_match_search(x, s, 1.0, hamming(2))
    assert record.index == 1
    np.testing.assert_array_equal(record.codeword, codeword_at(s, 1))


def test_zero_distortion_against_point_mass():
    s = spec((1.0, 0.0))
    record = d_match_search(np.zeros(20, dtype=int), s, 0.0, hamming(2))
    assert record.index == 1
    assert record.distortion == 0.0


def test_search_returns_minimal_index():
    s = spec(length=12, chunk_size=8)
    x = np.array([0, 1] * 6)
    d = 0.25
    record = d_match_search(x, s, d, hamming(2))
    for j in range(1, record.index):
        assert word_distortion(x, codeword_at(s, j), hamming(2)) > d
    assert word_distortion(x, codeword_at(s, record.index), hamming(2)) <= d
    assert record.distortion <= d
    assert record.search_cost == record.index


def test_search_is_independent_of_workers():
    s = spec(length=16, chunk_size=4)
    x = np.array([1, 1, 0, 0] * 4)
    sequential = d_match_search(x, s, 0.2, hamming(2))
    parallel = d_match_search(x, s, 0.2, hamming(2), workers=4)
    assert parallel.index == sequential.index
    np.testing.assert_array_equal(parallel.codeword, sequential.codeword)


def test_raising_d_never_raises_the_index():
    s = spec(length=16, chunk_size=16)
    x = np.array([0, 0, 1] * 5 + [1])
    indices = [d_match_search(x, s, d, hamming(2)).index for d in (0.2, 0.3, 0.4, 0.5)]
    assert indices == sorted(indices, reverse=True)


def test_exhausted_search():
    s = spec((1.0, 0.0), chunk_size=8)
    with pytest.raises(Exhausted) as caught:
        d_match_search(np.ones(20, dtype=int), s, 0.5, hamming(2), cap=100)
    assert caught.value.cap == 100
    assert caught.value.at(3, 4).iteration == 3


def test_markov_codewords_follow_the_chain():
    model = validate_model([[0.0, 1.0], [1.0, 0.0]], ergodic=False)
    s = markov_codebook(model, 9, master_seed=5).for_match(1, 1)
    word = codeword_at(s, 2)
    assert word.size == 9
    assert np.all(word[1:] != word[:-1])


def test_strict_positivity():
    assert is_strictly_positive(spec())
    assert not is_strictly_positive(spec((1.0, 0.0)))
    model = validate_model([[0.5, 0.5], [1.0, 0.0]])
    assert not is_strictly_positive(markov_codebook(model, 5))


def test_mean_match_index_agrees_with_monte_carlo():
    L, d, trials = 20, 0.5, 10 ** 4
    rng = np.random.default_rng(4242)
    sources = rng.integers(0, 2, (trials, L))
    base = spec(length=L, chunk_size=8)
    found = np.array([d_match_search(x, base.for_match(1, t), d, hamming(2)).index
                      for t, x in enumerate(sources, 1)])

    reference = np.random.default_rng(np.random.SeedSequence(9001))
    draws = reference.integers(0, 2, (trials, 40, L))
    hits = np.mean(draws != sources[:, None, :], axis=2) <= d
    assert hits.any(axis=1).all()
    expected = hits.argmax(axis=1) + 1

    error = np.hypot(found.std(ddof=1), expected.std(ddof=1)) / np.sqrt(trials)
    assert abs(found.mean() - expected.mean()) <= 3 * error
    p = stats.binom.cdf(L * d, L, 0.5)
    assert p == pytest.approx(0.588, abs=1e-3)
    assert found.mean() == pytest.approx(1 / p, abs=3 * found.std(ddof=1) / np.sqrt(trials))
