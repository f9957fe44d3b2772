"""Config-driven experiment runs and their reports.

A config is an INI file whose keys all live in [vars]:

    [vars]
    algorithm = markov
    source_transitions =
        0.8 0.2
        0.4 0.6
    d = 1/3
    M = 1
    L = 10 20 30
    K = 2000
    N = 50

A list of L values sweeps one run per value into <output_dir>/L<value>/.
Each run directory gets trace.csv, timing.csv, result.csv,
final_distribution.cfg and manifest.cfg (plus substreams.csv when the
sub-stream diagnostic is on).  The manifest's [vars] section is a complete
config: `nts run --config manifest.cfg` reproduces trace.csv byte for byte.
"""

import configparser
import csv
import dataclasses
import datetime
import fractions
import hashlib
import math
import os.path

import numpy as np
import pytz
from jinja2 import Template

import codebook
import rd_oracle
import seeding
from codebook import DEFAULT_CAP, DEFAULT_CHUNK
from distortion import (DistortionMeasure, d_max, hamming, in_operating_range,
                        supersymbol_measure)
from errors import (ConfigError, InfeasibleDistortion, MissingTrace, NonErgodicError,
                    NtsError, RangeError)
from markov_model import block_distribution, format_matrix, parse_matrix, sample_word
from markov_model import state_label, validate_model
from nts_algorithms import (nts_markov_run, nts_modified_run, nts_original_run,
                            sample_source_words)
from substreams import DEFAULT_FLOOR, decompose, empirical_coupling, slope_diagnostic

ALGORITHMS = ('original', 'modified', 'markov', 'deterministic-ab', 'alternating-min')
STOCHASTIC = ('original', 'modified', 'markov')
ORACLE_MODES = ('every-iteration', 'off')
SOURCE_MODES = ('independent', 'streaming')
WEIGHTS_MODES = ('product', 'fixed')

DETERMINISTIC_STEPS = 10 ** 4
CONVERGENCE_BAND = 0.02

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'templates')

_REQUIRED = object()


@dataclasses.dataclass
class ExperimentConfig:
    name: str
    algorithm: str
    source: object
    measure: DistortionMeasure
    d: float
    M: int = 1
    L: list = dataclasses.field(default_factory=list)
    K: int = 1
    N: int = 1
    q0: object = 'uniform'
    smoothing: float = 0.0
    cap: int = DEFAULT_CAP
    chunk_size: int = DEFAULT_CHUNK
    master_seed: int = 0
    oracle_eval: str = 'every-iteration'
    source_mode: str = 'independent'
    substream_diagnostic: bool = False
    substream_floor: int = DEFAULT_FLOOR
    tol: float = None
    weights_mode: str = 'product'
    weights: np.ndarray = None
    output_dir: str = 'out'
    variables: dict = dataclasses.field(default_factory=dict)

    @property
    def reproduction_size(self):
        return self.measure.reproduction_size


@dataclasses.dataclass
class RunOutput:
    """What one run writes: trace rows are (iteration, flat Q, mean match
    index, mean accepted distortion, oracle rate in nats or None)."""
    columns: list
    rows: list
    timing: list
    final: np.ndarray
    kind: str
    order: int
    result: dict
    substreams: list = None


######################################################################
# Configuration
######################################################################

def _fraction(text):
    return float(fractions.Fraction(text.strip()))


def _boolean(text):
    return configparser.ConfigParser.BOOLEAN_STATES[text.lower()]


def _int_list(text):
    values = [int(v) for v in text.replace(',', ' ').split()]
    if not values:
        raise ValueError('empty list')
    return values


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError('must be one of {0}'.format(', '.join(options)))
        return text
    return parse


def _field(section, key, parse, default=_REQUIRED):
    # configparser folds option names to lower case
    option = key.lower()
    if option not in section:
        if default is _REQUIRED:
            raise ConfigError(key, 'missing required parameter')
        return default
    text = section[option].strip().strip('"')
    try:
        return parse(text)
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as e:
        raise ConfigError(key, 'cannot use {0!r}: {1}'.format(text, e))


def _positive(key, value):
    if value < 1:
        raise ConfigError(key, 'must be at least 1, got {0}'.format(value))
    return value


def load_config(path, seed=None, out=None):
    """Read and validate an experiment config; seed and out override the file."""
    config = configparser.ConfigParser()
    if not config.read(path):
        raise ConfigError('config', 'cannot read {0}'.format(path))
    if not config.has_section('vars'):
        raise ConfigError('vars', 'config file {0} has no [vars] section'.format(path))
    variables = dict(config['vars'])
    if seed is not None:
        variables['master_seed'] = str(seed)
    if out is not None:
        variables['output_dir'] = out
    name = os.path.splitext(os.path.basename(path))[0]
    return config_from_vars(variables, name)


def config_from_vars(variables, name='experiment'):
    section = variables
    algorithm = _field(section, 'algorithm', _choice(ALGORITHMS))

    rows = _field(section, 'source_transitions', parse_matrix)
    size = _field(section, 'source_alphabet_size', int, rows.shape[1])
    try:
        source = validate_model(rows, size)
    except NtsError as e:
        raise ConfigError('source_transitions', str(e))
    order = _field(section, 'source_order', int, source.order)
    if order != source.order:
        raise ConfigError('source_order', '{0} rows imply order {1}, not {2}'.
                          format(rows.shape[0], source.order, order))

    reproduction_size = _field(section, 'reproduction_alphabet_size', int, size)
    kind = _field(section, 'measure', _choice(('hamming', 'table')), 'hamming')
    if kind == 'hamming':
        measure = hamming(size, reproduction_size)
    else:
        try:
            measure = DistortionMeasure(_field(section, 'measure_table', parse_matrix))
        except ValueError as e:
            raise ConfigError('measure_table', str(e))
        if measure.source_size != size:
            raise ConfigError('measure_table', '{0} rows for a source alphabet of {1}'.
                              format(measure.source_size, size))

    d = _field(section, 'd', _fraction)
    if d <= 0:
        raise ConfigError('d', 'must be positive')
    if algorithm in STOCHASTIC and d > d_max(source, measure) + 1e-12:
        raise ConfigError('d', '{0!r} is above d_max = {1!r}'.
                          format(d, d_max(source, measure)))

    stochastic = algorithm in STOCHASTIC
    default_n = DETERMINISTIC_STEPS if algorithm == 'deterministic-ab' else 1
    settings = dict(
        M=_positive('M', _field(section, 'M', int, 1)),
        L=_field(section, 'L', _int_list) if stochastic else [],
        K=_positive('K', _field(section, 'K', int, 1)),
        N=_positive('N', _field(section, 'N', int, _REQUIRED if stochastic else default_n)),
        smoothing=_field(section, 'smoothing', float, 1e-3 if algorithm == 'markov' else 0.0),
        cap=_positive('cap', _field(section, 'cap', int, DEFAULT_CAP)),
        chunk_size=_positive('chunk_size', _field(section, 'chunk_size', int, DEFAULT_CHUNK)),
        master_seed=_field(section, 'master_seed', int, 0),
        oracle_eval=_field(section, 'oracle_eval', _choice(ORACLE_MODES), 'every-iteration'),
        source_mode=_field(section, 'source_mode', _choice(SOURCE_MODES), 'independent'),
        substream_diagnostic=_field(section, 'substream_diagnostic', _boolean, False),
        substream_floor=_field(section, 'substream_floor', int, DEFAULT_FLOOR),
        tol=_field(section, 'tol', float, None),
        weights_mode=_field(section, 'weights_mode', _choice(WEIGHTS_MODES), 'product'),
        weights=_field(section, 'weights', parse_matrix, None),
        output_dir=_field(section, 'output_dir', str, 'out'),
    )
    if settings['smoothing'] < 0:
        raise ConfigError('smoothing', 'must be nonnegative')
    if algorithm == 'original' and (settings['K'] != 1 or settings['M'] != 1):
        raise ConfigError('K', 'the original algorithm runs with K = 1 and M = 1')
    for L in settings['L']:
        _positive('L', L)
    if settings['substream_diagnostic'] and algorithm != 'markov':
        raise ConfigError('substream_diagnostic', 'only markov runs have sub-streams')
    if settings['weights_mode'] == 'fixed':
        if algorithm == 'markov' and not settings['substream_diagnostic']:
            raise ConfigError('weights_mode', 'fixed weights in a markov run are measured '
                              'by the sub-stream diagnostic; turn it on')
        if algorithm == 'alternating-min' and settings['weights'] is None:
            raise ConfigError('weights', "weights_mode 'fixed' needs a weights matrix")

    config = ExperimentConfig(name, algorithm, source, measure, d, **settings)
    config.q0 = _initial(section.get('q0', 'uniform').strip(), config)
    config.variables = dict(variables)
    return config


def _initial(text, config):
    """Q0 as the algorithm consumes it, or None for the oracle defaults."""
    size = config.reproduction_size
    markov_shape = config.algorithm in ('markov', 'alternating-min')
    order = config.source.order if config.algorithm == 'alternating-min' else config.M
    n_states = size ** order
    if text == 'uniform':
        if config.algorithm == 'alternating-min':
            return None
        if markov_shape:
            return np.full((n_states, size), 1.0 / size)
        return np.full(n_states, 1.0 / n_states)
    try:
        values = parse_matrix(text)
    except ValueError as e:
        raise ConfigError('q0', str(e))
    if markov_shape:
        if values.shape != (n_states, size):
            raise ConfigError('q0', 'expected {0} rows of {1} entries'.format(n_states, size))
    else:
        values = values.reshape(-1)
        if values.size != n_states:
            raise ConfigError('q0', 'expected {0} entries'.format(n_states))
    if values.min() < 0 or np.any(np.abs(np.atleast_2d(values).sum(axis=1) - 1) > 1e-9):
        raise ConfigError('q0', 'rows must be probability vectors')
    if config.algorithm in STOCHASTIC:
        mode = codebook.MARKOV if markov_shape else codebook.IID
        if not codebook.is_strictly_positive(codebook.CodebookSpec(mode, values, 1, size, config.M)):
            raise ConfigError('q0', 'initial codebook must be strictly positive')
    return values


######################################################################
# Running
######################################################################

def _say(verbose, tag, message):
    if verbose:
        print('{0} {1}: {2}'.format(tag, datetime.datetime.now(), message))


def run_experiment(config, workers=1, verbose=False, debug=False):
    """Run every L of the config; returns the run directories."""
    lengths = config.L or [None]
    directories = []
    for L in lengths:
        out_dir = config.output_dir
        if len(lengths) > 1:
            out_dir = os.path.join(out_dir, 'L{0}'.format(L))
        tag = config.name if L is None else '{0} L{1}'.format(config.name, L)
        _say(verbose, tag, 'starting {0} run into {1}'.format(config.algorithm, out_dir))
        output = _dispatch(config, L, workers, verbose, debug, tag)
        write_run(config, L, out_dir, output)
        _say(verbose, tag, 'finished')
        directories.append(out_dir)
    return directories


def _dispatch(config, L, workers, verbose, debug, tag):
    options = dict(workers=workers, verbose=verbose, debug=debug, tag=tag)
    if config.algorithm in ('original', 'modified'):
        return _run_iid(config, L, options)
    if config.algorithm == 'markov':
        return _run_markov(config, L, options)
    if config.algorithm == 'deterministic-ab':
        return _run_deterministic(config, verbose, tag)
    return _run_alternating(config, verbose, tag)


def _streaming_words(config, count, letters):
    print('{0}: streaming source mode cuts consecutive blocks from one realization; '
          'the words are not independent and the run is non-conforming'.format(config.name))
    word = sample_word(config.source, count * letters,
                       seeding.stream(config.master_seed, 0, 0, seeding.Role.STREAM))
    return word.reshape(count, letters)


def _check_range(config, Q):
    try:
        inside = in_operating_range(config.source, Q, config.measure, config.d)
    except NtsError:
        return
    if not inside:
        print('{0}: d = {1:.6g} is outside (D_min, D_av) for the initial codebook'.
              format(config.name, config.d))


def _iid_labels(size, order):
    return ['Q_{0}'.format(state_label(i, size, order)) for i in range(size ** order)]


def _markov_labels(size, order):
    if order == 0:
        return ['Q_{0}'.format(j) for j in range(size)]
    return ['Q_{0}given{1}'.format(j, state_label(i, size, order))
            for i in range(size ** order) for j in range(size)]


def _trace_rows(trace):
    return [(r.iteration, np.asarray(r.distribution).reshape(-1), r.mean_match_index,
             r.mean_distortion, r.oracle_rate) for r in trace.records]


def _point_result(point, reference):
    return {'rate_bits': None if point is None else point.rate_bits,
            'distortion': None if point is None else point.distortion,
            'slope': None if point is None else point.slope,
            'reference_rate_bits': reference}


def _run_iid(config, L, options):
    source, measure, d, M, K = config.source, config.measure, config.d, config.M, config.K
    letters = M * L
    count = K * config.N
    if config.source_mode == 'streaming':
        words = _streaming_words(config, count, letters)
    else:
        words = sample_source_words(source, count, letters, config.master_seed, K)
    _check_range(config, config.q0)

    def oracle(Q):
        try:
            return rd_oracle.rpqd(source, Q, measure, d).rate
        except RangeError:
            return None

    common = dict(master_seed=config.master_seed, cap=config.cap, smoothing=config.smoothing,
                  chunk_size=config.chunk_size,
                  oracle=oracle if config.oracle_eval == 'every-iteration' else None,
                  **options)
    if config.algorithm == 'original':
        trace = nts_original_run(words, measure, L, d, config.q0, **common)
    else:
        trace = nts_modified_run(words, measure, M, L, K, d, config.q0, **common)

    try:
        point = rd_oracle.rpqd(source, trace.final, measure, d)
    except RangeError:
        point = None
    reference = rd_oracle.iid_reference(source, measure, M, d).rate_bits
    return RunOutput(_iid_labels(config.reproduction_size, M), _trace_rows(trace),
                     [(r.iteration, r.wall_ms) for r in trace.records[1:]],
                     trace.final, 'iid', M, _point_result(point, reference))


def _run_markov(config, L, options):
    source, measure, d, M, K = config.source, config.measure, config.d, config.M, config.K
    size = config.reproduction_size
    words = None
    if config.source_mode == 'streaming':
        words = _streaming_words(config, K * config.N, L)
    matched = source.order == M
    if not matched:
        print('{0}: codebook order {1} differs from source order {2}; '
              'no cross-product oracle'.format(config.name, M, source.order))

    def oracle(rows):
        try:
            return rd_oracle.average_rate(source, rows, measure, d)[0]
        except (RangeError, InfeasibleDistortion, NonErgodicError):
            return None

    use_oracle = matched and config.oracle_eval == 'every-iteration'
    trace = nts_markov_run(source, measure, M, L, K, config.N, d, config.q0,
                           master_seed=config.master_seed, cap=config.cap,
                           smoothing=config.smoothing, chunk_size=config.chunk_size,
                           source_words=words, oracle=oracle if use_oracle else None,
                           keep_matches=config.substream_diagnostic, **options)

    substream_rows, measured = None, None
    if config.substream_diagnostic:
        substream_rows, measured = _substream_rows(config, trace)

    result = _point_result(None, None)
    if matched:
        try:
            rate, allocation = rd_oracle.average_rate(source, trace.final, measure, d)
            result.update(rate_bits=rd_oracle.to_bits(rate),
                          distortion=allocation.average_distortion, slope=allocation.slope)
        except (RangeError, InfeasibleDistortion, NonErgodicError):
            pass
        reference = rd_oracle.alternating_min_markov(
            source, measure, d, config.weights_mode, measured, **_tolerance(config))
        result['reference_rate_bits'] = reference.rate_bits
    return RunOutput(_markov_labels(size, M), _trace_rows(trace),
                     [(r.iteration, r.wall_ms) for r in trace.records[1:]],
                     trace.final, 'markov', M, result, substream_rows)


def _tolerance(config):
    return {} if config.tol is None else {'tol': config.tol}


def _substream_rows(config, trace):
    """Per-iteration sub-stream pairs of the matched blocks; also returns the
    last iteration's measured coupling for fixed-weight references."""
    rows = []
    weights = None
    for previous, record in zip(trace.records, trace.records[1:]):
        source_words, codewords = record.matches
        decomp = decompose(source_words, codewords, config.M, config.measure)
        report = slope_diagnostic(decomp, config.source, previous.distribution,
                                  config.measure, config.substream_floor)
        if report.insufficient or report.skipped:
            print('{0}: iteration {1}: {2} pairs below {3} letters, {4} at D_min; skipping them'.
                  format(config.name, record.iteration, len(report.insufficient),
                         config.substream_floor, len(report.skipped)))
        weights = empirical_coupling(decomp).weights
        for x, y in decomp.occupied():
            rows.append((record.iteration, x, y, int(decomp.lengths[x, y]), weights[x, y],
                         decomp.distortions[x, y], report.slopes[x, y], report.spread))
    return rows, weights


def _run_deterministic(config, verbose, tag):
    M = config.M
    P = block_distribution(config.source, M)
    measure = supersymbol_measure(config.measure, M)
    tol = 1e-12 if config.tol is None else config.tol
    Q = config.q0
    point = rd_oracle.rpqd(P, Q, measure, config.d)
    rows = [(0, Q, None, None, point.rate)]
    timing = []
    for n in range(1, config.N + 1):
        started = datetime.datetime.now()
        Q = rd_oracle.nts_deterministic_step(P, Q, measure, config.d)
        previous = point.rate
        point = rd_oracle.rpqd(P, Q, measure, config.d)
        rows.append((n, Q, None, None, point.rate))
        timing.append((n, (datetime.datetime.now() - started).total_seconds() * 1000.0))
        if abs(previous - point.rate) < tol:
            break
    _say(verbose, tag, '{0} deterministic steps, rate {1:.9g} bits'.
         format(len(rows) - 1, point.rate_bits))
    reference = rd_oracle.blahut_arimoto_rd(P, measure, config.d).rate_bits
    return RunOutput(_iid_labels(config.reproduction_size, M), rows, timing, Q, 'iid', M,
                     _point_result(point, reference))


def _run_alternating(config, verbose, tag):
    source = config.source
    path = []
    started = datetime.datetime.now()
    result = rd_oracle.alternating_min_markov(
        source, config.measure, config.d, config.weights_mode, config.weights,
        initial=config.q0, path=path, **_tolerance(config))
    elapsed = (datetime.datetime.now() - started).total_seconds() * 1000.0
    _say(verbose, tag, '{0} alternations, rate {1:.9g} bits'.
         format(result.iterations, result.rate_bits))
    rows = [(i, rows_i.reshape(-1), None, None, rate) for i, (rows_i, rate) in enumerate(path)]
    reference = rd_oracle.iid_reference(source, config.measure, max(source.order, 1),
                                        config.d).rate_bits
    summary = {'rate_bits': result.rate_bits,
               'distortion': result.allocation.average_distortion,
               'slope': result.allocation.slope,
               'reference_rate_bits': reference}
    return RunOutput(_markov_labels(config.reproduction_size, source.order), rows,
                     [(result.iterations, elapsed)], result.conditionals, 'markov',
                     source.order, summary)


######################################################################
# Output files
######################################################################

def _number(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    return '{0:.12g}'.format(value)


def _write_csv(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_run(config, L, out_dir, output):
    os.makedirs(out_dir, exist_ok=True)
    header = (['iteration'] + output.columns +
              ['mean_match_index', 'mean_accept_distortion', 'oracle_rate_bits'])
    _write_csv(os.path.join(out_dir, 'trace.csv'), header, (
        [str(n)] + [_number(float(v)) for v in values] + [_number(index), _number(distortion),
                                                          _number(None if rate is None else
                                                                  rd_oracle.to_bits(rate))]
        for n, values, index, distortion, rate in output.rows))
    _write_csv(os.path.join(out_dir, 'timing.csv'), ['iteration', 'wall_ms'],
               ([str(n), _number(ms)] for n, ms in output.timing))
    keys = ['rate_bits', 'distortion', 'slope', 'reference_rate_bits']
    _write_csv(os.path.join(out_dir, 'result.csv'), keys,
               [[_number(output.result[k]) for k in keys]])
    if output.substreams is not None:
        _write_csv(os.path.join(out_dir, 'substreams.csv'),
                   ['iteration', 'source_state', 'code_state', 'length', 'weight',
                    'distortion', 'slope', 'spread'],
                   ([str(n), str(x), str(y), str(length)] + [_number(float(v)) for v in rest]
                    for n, x, y, length, *rest in output.substreams))
    write_distribution(os.path.join(out_dir, 'final_distribution.cfg'), output.kind,
                       config.reproduction_size, output.order, output.final)
    write_manifest(os.path.join(out_dir, 'manifest.cfg'), config, L, out_dir)


def write_distribution(path, kind, alphabet_size, order, values):
    parser = configparser.ConfigParser()
    parser['distribution'] = {'kind': kind,
                              'alphabet_size': str(alphabet_size),
                              'order': str(order),
                              'values': format_matrix(values)}
    with open(path, 'w', newline='\n') as f:
        parser.write(f)


def read_distribution(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise MissingTrace('no distribution file at {0}'.format(path))
    section = parser['distribution']
    values = parse_matrix(section['values'])
    return section['kind'], values if section['kind'] == 'markov' else values.reshape(-1)


def input_hash(variables):
    text = '\n'.join('{0} = {1}'.format(k, variables[k].strip()) for k in sorted(variables))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def write_manifest(path, config, L, out_dir):
    """[vars] re-runs this exact run; [run] records when and from what."""
    variables = dict(config.variables)
    variables['master_seed'] = str(config.master_seed)
    variables['output_dir'] = out_dir
    if L is not None:
        variables['l'] = str(L)
    parser = configparser.ConfigParser()
    parser['vars'] = variables
    parser['run'] = {'name': config.name,
                     'algorithm': config.algorithm,
                     'master_seed': str(config.master_seed),
                     'input_hash': input_hash(variables),
                     'created': datetime.datetime.now(pytz.utc).strftime('%Y-%m-%dT%H:%M:%SZ')}
    with open(path, 'w', newline='\n') as f:
        parser.write(f)


######################################################################
# Reporting
######################################################################

def _trace_files(in_dir):
    found = []
    for root, dirs, files in os.walk(in_dir):
        dirs.sort()
        if 'trace.csv' in files:
            found.append(os.path.join(root, 'trace.csv'))
    return found


def read_trace(path):
    if not os.path.isfile(path):
        raise MissingTrace('no trace at {0}'.format(path))
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise MissingTrace('trace {0} has no rows'.format(path))
    return rows


def convergence_iteration(rows, columns, band=CONVERGENCE_BAND):
    """First iteration from which every column stays within `band` of its
    final value."""
    final = {c: float(rows[-1][c]) for c in columns}
    settled = rows[-1]['iteration']
    for row in reversed(rows):
        if any(abs(float(row[c]) - final[c]) > band for c in columns):
            break
        settled = row['iteration']
    return int(settled)


def _summarize(in_dir, trace_path):
    rows = read_trace(trace_path)
    run_dir = os.path.dirname(trace_path)
    columns = [c for c in rows[0] if c.startswith('Q_')]
    rates = [row['oracle_rate_bits'] for row in rows if row['oracle_rate_bits']]
    summary = {'name': os.path.relpath(run_dir, in_dir),
               'algorithm': '',
               'iterations': int(rows[-1]['iteration']),
               'final': [(c, rows[-1][c]) for c in columns],
               'final_rate': rates[-1] if rates else '',
               'convergence': convergence_iteration(rows, columns),
               'result': {}}
    manifest = configparser.ConfigParser()
    if manifest.read(os.path.join(run_dir, 'manifest.cfg')) and manifest.has_section('run'):
        summary['algorithm'] = manifest['run'].get('algorithm', '')
    result_path = os.path.join(run_dir, 'result.csv')
    if os.path.isfile(result_path):
        with open(result_path, newline='') as f:
            summary['result'] = next(csv.DictReader(f), {})
    return summary, rows, columns


def report(in_dir, verbose=False):
    """Summarize every run under in_dir into summary.txt and tidy.csv."""
    traces = _trace_files(in_dir)
    if not traces:
        raise MissingTrace('no trace.csv under {0}'.format(in_dir))
    runs = []
    tidy = []
    for path in traces:
        summary, rows, columns = _summarize(in_dir, path)
        _say(verbose, summary['name'], 'read {0} trace rows'.format(len(rows)))
        runs.append(summary)
        for row in rows:
            for column in columns + ['oracle_rate_bits']:
                if row[column]:
                    tidy.append((summary['name'], row['iteration'], column, row[column]))

    summary_template = Template(open(os.path.join(TEMPLATE_DIR, 'summary.txt')).read())
    text = summary_template.render(
        {'runs': runs,
         'in_dir': in_dir,
         'band': CONVERGENCE_BAND,
         'now_utc': datetime.datetime.now(pytz.utc).strftime('%a %Y-%b-%d %I:%M %p')})
    summary_output = open(os.path.join(in_dir, 'summary.txt'), 'w')
    summary_output.write(text)
    summary_output.close()
    _write_csv(os.path.join(in_dir, 'tidy.csv'), ['run', 'iteration', 'column', 'value'], tidy)
    return runs
