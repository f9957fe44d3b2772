#!/usr/bin/python3

import getopt
import sys

import experiment
from errors import ConfigError, Exhausted, NonConvergence, NtsError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_EXHAUSTED = 3
EXIT_NONCONVERGENCE = 4


def main(argv):
    try:
        opts, args = getopt.gnu_getopt(
            argv, "c:dhi:o:s:vw:",
            ["config=", "debug", "help", "in=", "out=", "seed=", "verbose",
             "workers="])
    except getopt.GetoptError as e:
        print(e)
        usage()
        sys.exit(EXIT_CONFIG)
    config_path = ''
    in_dir = ''
    out_dir = None
    seed = None
    workers = '1'
    DEBUG = False
    VERBOSE = False

    for opt, arg in opts:
        if opt in ("-c", "--config"):
            config_path = arg
        elif opt in ("-d", "--debug"):
            DEBUG = True
        elif opt in ("-h", "--help"):
            usage()
            sys.exit()
        elif opt in ("-i", "--in"):
            in_dir = arg
        elif opt in ("-o", "--out"):
            out_dir = arg
        elif opt in ("-s", "--seed"):
            seed = arg
        elif opt in ("-v", "--verbose"):
            VERBOSE = True
        elif opt in ("-w", "--workers"):
            workers = arg

    command = args[0] if args else ''
    try:
        if command == 'run':
            if not config_path:
                raise ConfigError('config', 'run needs --config <file>')
            run(config_path, seed, out_dir, workers, VERBOSE, DEBUG)
        elif command == 'report':
            if not in_dir:
                raise ConfigError('in', 'report needs --in <dir>')
            experiment.report(in_dir, VERBOSE)
        else:
            usage()
            sys.exit(EXIT_CONFIG if command else EXIT_OK)
    except ConfigError as e:
        print('Config error in {0}'.format(e))
        sys.exit(EXIT_CONFIG)
    except Exhausted as e:
        print('Search exhausted: {0}'.format(e))
        sys.exit(EXIT_EXHAUSTED)
    except NonConvergence as e:
        print('No convergence: {0}'.format(e))
        sys.exit(EXIT_NONCONVERGENCE)
    except NtsError as e:
        print('{0}: {1}'.format(type(e).__name__, e))
        sys.exit(EXIT_ERROR)


def run(config_path, seed, out_dir, workers, VERBOSE, DEBUG):
    try:
        seed = None if seed is None else int(seed)
    except ValueError:
        raise ConfigError('seed', '{0!r} is not an integer'.format(seed))
    try:
        workers = int(workers)
    except ValueError:
        raise ConfigError('workers', '{0!r} is not an integer'.format(workers))
    config = experiment.load_config(config_path, seed, out_dir)
    return experiment.run_experiment(config, workers, VERBOSE, DEBUG)


def usage():
    print("""Usage:\n
One of:
  run --config FILE  Run the experiment described by FILE, an INI file with
                     a [vars] section (see the *_preset.cfg files).  Writes
                     trace.csv, timing.csv, result.csv, final_distribution.cfg
                     and manifest.cfg into the output directory.\n
  report --in DIR    Summarize every trace.csv under DIR into DIR/summary.txt
                     and the long-format DIR/tidy.csv.\n

Optionally:
  --seed N       override master_seed from the config.\n
  --out DIR      override output_dir from the config.\n
  --workers N    run the K matches of an iteration on N threads.  Results do
                 not depend on N.\n
  --verbose      Show progress messages.\n
  --debug        Also show every d-match.\n
  --help         for this message.\n

Exit status: 0 success, 2 config error, 3 exhausted search,
4 numeric non-convergence, 1 any other failure.\n""")


if __name__ == "__main__":
    main(sys.argv[1:])
