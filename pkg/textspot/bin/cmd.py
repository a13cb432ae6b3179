"""
The command line interface for textspot
"""

import argparse
import json

from .helper import EXIT_USAGE, add_config_args, try_get_config
from .gen_labels import set_up_gen_labels
from .infer import set_up_infer
from .postprocess import set_up_postprocess
from .gradcheck import set_up_grad_check
from .eval import set_up_eval
from .bench import set_up_bench
from .fixture import set_up_fixture
from .ppm import set_up_ppm2ptm


class _ArgumentParser(argparse.ArgumentParser):
    ''' Exits with code 1 on usage errors '''

    def error(self, message):
        self.print_usage()
        self.exit(EXIT_USAGE, f"[ERROR] {message}\n")


def _generate_show_config_args_parser(subparsers):
    parser = subparsers.add_parser('show-config',
        help='Show the effective configuration after applying all overrides')
    add_config_args(parser)
    parser.set_defaults(func=_show_config)


def _show_config(args):
    config = try_get_config(args)
    print(json.dumps(config.to_dict(), indent=2))


def main():
    ''' The main logic for the command line utilities '''

    parser = _ArgumentParser(
            description='Detect, recognize, evaluate and benchmark arbitrarily-shaped text')
    subparsers = parser.add_subparsers(title="Commands", required=True)

    _generate_show_config_args_parser(subparsers)

    set_up_gen_labels(subparsers)
    set_up_infer(subparsers)
    set_up_postprocess(subparsers)
    set_up_grad_check(subparsers)
    set_up_eval(subparsers)
    set_up_bench(subparsers)
    set_up_fixture(subparsers)
    set_up_ppm2ptm(subparsers)

    args = parser.parse_args()
    args.func(args)


# Needed for testing
if __name__ == "__main__":
    main()
