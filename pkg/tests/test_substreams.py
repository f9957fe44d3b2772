import math

import numpy as np
import pytest

from distortion import DistortionMeasure, hamming
from errors import EmptyDecomposition, InsufficientData, LengthMismatchError
from markov_model import sample_words, validate_model
from nts_algorithms import nts_markov_run
from rd_oracle import average_rate
from seeding import generator
from substreams import (SubstreamDecomposition, assigned_distortion, decompose,
                        empirical_coupling, goodness_of_fit, slope_diagnostic)

TOY = validate_model([[0.8, 0.2], [0.4, 0.6]])
UNIFORM = np.full((2, 2), 0.5)


def test_hand_traced_decomposition():
    decomp = decompose([0, 0, 1, 0], [0, 1, 1, 0], 1)
    assert sorted(decomp.pairs) == [(0, 0), (0, 1), (1, 1)]
    np.testing.assert_array_equal(decomp.pairs[0, 0], [[0, 1]])
    np.testing.assert_array_equal(decomp.pairs[0, 1], [[1, 1]])
    np.testing.assert_array_equal(decomp.pairs[1, 1], [[0, 0]])
    np.testing.assert_allclose(decomp.weights, [[1 / 3, 1 / 3], [0, 1 / 3]])
    assert decomp.skipped == 1
    assert math.isnan(decomp.distortions[1, 0])


def test_identical_blocks_have_zero_distortion():
    word = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    decomp = decompose(word, word, 1)
    occupied = decomp.lengths > 0
    np.testing.assert_array_equal(decomp.distortions[occupied], 0.0)


def test_constant_blocks_make_one_pair():
    measure = DistortionMeasure([[0.0, 0.7], [1.0, 0.0]])
    decomp = decompose([0, 0, 0, 0], [1, 1, 1, 1], 1, measure)
    assert decomp.occupied() == [(0, 1)]
    assert decomp.weights[0, 1] == 1.0
    assert decomp.distortions[0, 1] == pytest.approx(0.7)
    coupling = empirical_coupling(decomp)
    assert coupling.x_given_y[0, 1] == 1.0
    assert coupling.y_given_x[0, 1] == 1.0


def test_blocks_must_agree():
    with pytest.raises(LengthMismatchError):
        decompose([0, 1, 0, 1], [0, 1, 0, 1, 1], 1)
    with pytest.raises(LengthMismatchError):
        decompose([0, 1], [0, 1], 2)


def test_boundaries_skip_each_word_prefix():
    rng = np.random.default_rng(8)
    source = rng.integers(0, 2, (3, 10))
    code = rng.integers(0, 2, (3, 10))
    rows = decompose(source, code, 2)
    flat = decompose(source.ravel(), code.ravel(), 2, boundaries=[10, 20])
    np.testing.assert_array_equal(rows.lengths, flat.lengths)
    assert rows.skipped == flat.skipped == 6
    assert rows.total == 3 * (10 - 2)


def test_assignment_is_a_partition_and_reconstructs_distortion():
    rng = np.random.default_rng(100)
    measure = DistortionMeasure(rng.random((2, 2)))
    for _ in range(100):
        M = int(rng.integers(1, 4))
        K, L = int(rng.integers(1, 6)), int(rng.integers(M + 1, 40))
        source = rng.integers(0, 2, (K, L))
        code = rng.integers(0, 2, (K, L))
        decomp = decompose(source, code, M, measure)
        assert decomp.total == K * (L - M)
        assert sum(len(rows) for rows in decomp.pairs.values()) == decomp.total
        exact = assigned_distortion(source, code, M, measure)
        assert decomp.reconstructed_distortion() == exact
        assert decomp.weighted_distortion() == pytest.approx(exact, abs=1e-12)


def test_coupling_is_bayes_consistent():
    rng = np.random.default_rng(3)
    decomp = decompose(rng.integers(0, 2, 500), rng.integers(0, 2, 500), 1)
    coupling = empirical_coupling(decomp)
    assert coupling.weights.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(coupling.x_given_y.sum(axis=0), 1.0)
    np.testing.assert_allclose(coupling.y_given_x.sum(axis=1), 1.0)
    np.testing.assert_allclose(coupling.x_given_y * coupling.weights.sum(axis=0),
                               coupling.y_given_x * coupling.weights.sum(axis=1)[:, None])


def test_coupling_follows_relabeling():
    rng = np.random.default_rng(9)
    source, code = rng.integers(0, 2, 200), rng.integers(0, 2, 200)
    weights = empirical_coupling(decompose(source, code, 1)).weights
    swapped = empirical_coupling(decompose(1 - source, 1 - code, 1)).weights
    np.testing.assert_array_equal(swapped, weights[::-1, ::-1])


def test_empty_decomposition():
    decomp = SubstreamDecomposition(1, np.zeros((2, 2), dtype=np.int64), np.full((2, 2), np.nan))
    with pytest.raises(EmptyDecomposition):
        empirical_coupling(decomp)


def test_slopes_of_an_oracle_allocation_agree():
    rows = np.array([[0.9, 0.1], [0.3, 0.7]])
    _, allocation = average_rate(TOY, rows, hamming(2), 0.2)
    lengths = np.round(allocation.weights.reshape(2, 2) * 1e6).astype(np.int64)
    decomp = SubstreamDecomposition(1, lengths, allocation.distortions.reshape(2, 2))
    report = slope_diagnostic(decomp, TOY, rows, hamming(2))
    assert report.finite().size == 4
    assert report.spread < 1e-3
    assert report.slopes[0, 0] == pytest.approx(allocation.slope, abs=1e-6)


def test_single_pair_has_no_spread():
    decomp = decompose([0, 0, 0, 0], [1, 1, 1, 1], 1)
    report = slope_diagnostic(decomp, TOY, UNIFORM, hamming(2), floor=1)
    assert report.spread == 0.0
    assert report.finite().size == 1


def test_short_pairs_are_reported_not_fatal():
    decomp = decompose([0, 1, 1, 0, 0, 1], [0, 1, 0, 0, 1, 1], 1)
    report = slope_diagnostic(decomp, TOY, UNIFORM, hamming(2))
    assert len(report.insufficient) == len(decomp.occupied())
    assert all(isinstance(e, InsufficientData) for e in report.insufficient)
    assert report.finite().size == 0


def test_zero_distortion_pairs_are_skipped():
    word = np.array([0, 1, 1, 0, 1, 0, 0, 1] * 50)
    report = slope_diagnostic(decompose(word, word, 1), TOY, UNIFORM, hamming(2), floor=10)
    assert sorted(report.skipped) == [(0, 0), (1, 1)]


def test_source_substreams_are_memoryless():
    source = sample_words(TOY, 1, 10 ** 5, generator(57))[0]
    code = sample_words(TOY, 1, 10 ** 5, generator(58))[0]
    decomp = decompose(source, code, 1)
    assert goodness_of_fit(decomp, TOY, 0) > 0.01


def test_one_dimensional_block_without_boundaries_is_one_word():
    source, code = [0, 1, 1, 0, 1, 0], [0, 1, 0, 0, 1, 1]
    flat = decompose(source, code, 1)
    rows = decompose([source], [code], 1)
    np.testing.assert_array_equal(flat.lengths, rows.lengths)
    assert flat.total == 5
    assert flat.skipped == 1


@pytest.mark.slow
def test_slope_spread_narrows_as_the_codebook_settles():
    narrower = 0
    for seed in range(20):
        trace = nts_markov_run(TOY, hamming(2), 1, 30, 300, 20, 1 / 3, UNIFORM,
                               master_seed=seed, keep_matches=True, workers=4)
        spreads = []
        for previous, record in ((trace.records[0], trace.records[1]),
                                 (trace.records[-2], trace.records[-1])):
            decomp = decompose(*record.matches, 1, hamming(2))
            spreads.append(slope_diagnostic(decomp, TOY, previous.distribution,
                                            hamming(2)).spread)
        early, late = spreads
        narrower += late <= early
    assert narrower >= 16
