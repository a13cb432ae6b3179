''' Helper functions for the commmand line interface '''

import sys

from functools import wraps
from typing import NoReturn

from textspot.config import RunConfig, load_config
from textspot.errors import ConfigurationError, DATA_ERRORS
from textspot.logging import RunLogger

EXIT_USAGE = 1
EXIT_DATA = 2


def fatal_error(message, code: int = EXIT_USAGE) -> NoReturn:
    ''' Show an error message and terminate the program '''
    print(f"[ERROR] {message}")
    sys.exit(code)


def add_config_args(parser):
    ''' Arguments shared by every command that reads a run config '''
    parser.add_argument('--config', '-c', type=str,
        help="TOML file with the run configuration. Defaults are used if not set")
    parser.add_argument('-D', action='append', type=str, dest='options',
        help='Set/overwrite a config value, e.g., "-D pa.dist_threshold=2.5"')
    parser.add_argument('--verbose', action='store_true',
        help="Print progress messages")
    parser.add_argument('--log-dir', type=str,
        help="Also append all messages to <log-dir>/textspot.log")


def try_get_config(args) -> RunConfig:
    ''' Fetch the specified config and generate an error if
        reading it fails '''
    try:
        return load_config(args.config, args.options)
    except ConfigurationError as err:
        fatal_error(err)


def make_logger(args, config: RunConfig) -> RunLogger:
    ''' The logger of one command invocation '''
    return RunLogger(log_dir=args.log_dir, verbose=args.verbose or config.run.verbose)


def handles_errors(func):
    '''
        Turn library errors raised by a command into fatal errors
        with the matching exit code
    '''
    @wraps(func)
    def _wrapper(args):
        try:
            return func(args)
        except ConfigurationError as err:
            fatal_error(err, EXIT_USAGE)
        except DATA_ERRORS as err:
            fatal_error(err, EXIT_DATA)

    return _wrapper
