''' Verify the analytic loss gradients against finite differences '''

import sys

from textspot.losses.gradcheck import DEFAULT_EPSILON, DEFAULT_SAMPLES, DEFAULT_TOLERANCE
from textspot.losses.gradcheck import default_cases

from .helper import EXIT_DATA, add_config_args, handles_errors, make_logger, try_get_config


def set_up_grad_check(subparsers):
    ''' Set up arguments for the `grad-check` command '''

    parser = subparsers.add_parser('grad-check',
        help="Compare loss gradients with central finite differences on seeded fixtures")

    parser.add_argument('--samples', type=int, default=DEFAULT_SAMPLES,
        help="Number of sampled coordinates per loss")
    parser.add_argument('--epsilon', type=float, default=DEFAULT_EPSILON)
    parser.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE,
        help="Largest accepted relative error")
    add_config_args(parser)

    parser.set_defaults(func=_grad_check_command)


@handles_errors
def _grad_check_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    seed = config.run.seed
    cases = default_cases(seed, config.loss, config.model.emb_dim)

    print(f"{'loss':<8}{'max rel. error':>16}{'checked':>10}{'excluded':>10}  result")
    failed = []
    for case in cases:
        result = case.run(epsilon=args.epsilon, samples=args.samples, seed=seed)
        passed = result.passed(args.tolerance)
        if not passed:
            failed.append(case.name)
        print(f"{case.name:<8}{result.max_rel_error:>16.3e}{result.checked:>10}"
              f"{result.excluded:>10}  {'pass' if passed else 'FAIL'}")

    logger.close()

    if failed:
        print(f"💥 Gradient check failed for: {', '.join(failed)}")
        sys.exit(EXIT_DATA)

    print("☑️ All gradient checks passed")
