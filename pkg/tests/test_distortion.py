import numpy as np
import pytest

from distortion import (DistortionMeasure, block_table, d_av, d_max, d_min, hamming,
                        in_operating_range, load_measure, save_measure, source_blocks,
                        supersymbol_measure, word_distortion, words_distortion)
from errors import LengthMismatchError
from markov_model import memoryless, validate_model

TOY = validate_model([[0.8, 0.2], [0.4, 0.6]])


def test_hamming_word_distortion():
    assert word_distortion([0, 1, 0, 1], [0, 1, 1, 1], hamming(2)) == 0.25
    assert word_distortion([1, 0, 1], [1, 0, 1], hamming(2)) == 0.0


def test_table_word_distortion():
    measure = DistortionMeasure([[0, 2], [1, 0]])
    assert word_distortion([0, 1], [1, 0], measure) == 1.5


def test_word_lengths_must_agree():
    with pytest.raises(LengthMismatchError):
        word_distortion([0, 1], [0, 1, 1], hamming(2))


def test_concatenation_is_length_weighted():
    rng = np.random.default_rng(3)
    measure = DistortionMeasure(rng.random((3, 2)))
    x = rng.integers(0, 3, 30)
    y = rng.integers(0, 2, 30)
    whole = word_distortion(x, y, measure)
    parts = (12 * word_distortion(x[:12], y[:12], measure) +
             18 * word_distortion(x[12:], y[12:], measure)) / 30
    assert whole == pytest.approx(parts, abs=1e-12)
    order = rng.permutation(30)
    assert word_distortion(x[order], y[order], measure) == pytest.approx(whole, abs=1e-12)


def test_words_distortion_matches_single_words():
    x = np.array([0, 1, 1, 0])
    words = np.array([[0, 1, 1, 0], [1, 1, 1, 1], [1, 0, 0, 1]])
    np.testing.assert_allclose(words_distortion(x, words, hamming(2)), [0.0, 0.5, 1.0])


def test_negative_table_is_rejected():
    with pytest.raises(ValueError):
        DistortionMeasure([[0, -1], [1, 0]])


def test_block_table_averages_letters():
    table = block_table(hamming(2), 2)
    assert table.shape == (4, 4)
    assert table[0, 3] == 1.0
    assert table[1, 0] == 0.5
    assert table[2, 2] == 0.0
    assert supersymbol_measure(hamming(2), 1).table.shape == (2, 2)


def test_d_av():
    assert d_av([0.5, 0.5], [0.5, 0.5], hamming(2)) == pytest.approx(0.5)
    assert d_av([2 / 3, 1 / 3], [1.0, 0.0], hamming(2)) == pytest.approx(1 / 3)
    assert d_av([1.0, 0.0], [1.0, 0.0], hamming(2)) == 0.0


def test_d_min():
    assert d_min([0.5, 0.5], [0.5, 0.5], hamming(2)) == 0.0
    assert d_min([0.5, 0.5], [0.0, 1.0], hamming(2)) == 0.5
    assert d_min([0.5, 0.5], [0.5, 0.5], DistortionMeasure([[3, 5], [2, 4]])) == 2.5


def test_d_max():
    assert d_max(TOY, hamming(2)) == pytest.approx(1 / 3)
    assert d_max(memoryless([0.5, 0.5]), hamming(2)) == pytest.approx(0.5)
    assert d_max([0.3, 0.7], hamming(2)) == pytest.approx(0.3)


def test_range_quantities_accept_markov_sources():
    # super-symbol order 2 is read off the length of Q
    uniform = np.full(4, 0.25)
    assert d_av(TOY, uniform, hamming(2)) == pytest.approx(0.5)
    P, Q, table = source_blocks(TOY, uniform, hamming(2))
    assert P.size == 4 and table.shape == (4, 4)


def test_operating_range():
    assert in_operating_range([0.5, 0.5], [0.5, 0.5], hamming(2), 0.25)
    assert not in_operating_range([0.5, 0.5], [0.5, 0.5], hamming(2), 0.5)
    assert not in_operating_range([0.5, 0.5], [0.0, 1.0], hamming(2), 0.5)


def test_mismatched_shapes():
    with pytest.raises(LengthMismatchError):
        d_av([0.2, 0.3, 0.5], [0.5, 0.5], hamming(2))


def test_measure_file_round_trip(tmp_path):
    path = str(tmp_path / 'measure.cfg')
    measure = DistortionMeasure([[0, 0.25], [1.5, 0]], 'asymmetric')
    save_measure(measure, path)
    loaded = load_measure(path)
    np.testing.assert_array_equal(loaded.table, measure.table)
    assert loaded.name == 'asymmetric'
