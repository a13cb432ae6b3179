''' Time the four pipeline stages, optionally across a sweep of config values '''

from textspot.benchmark import DEFAULT_MAP_SIZE, ListSteps, ResultPrinter, run_benchmark
from textspot.benchmark import run_sweep

from .helper import add_config_args, fatal_error, handles_errors, make_logger, try_get_config


def set_up_bench(subparsers):
    ''' Set up arguments for the `bench` command '''

    parser = subparsers.add_parser('bench',
        help="Report mean/p50/p99 milliseconds of backbone, FPEMs, detection+PA "
             "and recognition")

    parser.add_argument('--repetitions', '-R', type=int,
        help="Runs per configuration. Defaults to run.bench_repetitions")
    parser.add_argument('--map-size', type=int, default=DEFAULT_MAP_SIZE,
        help="Side of the stride-4 maps; the image is four times as large")
    parser.add_argument('--det-only', action='store_true',
        help="Leave out recognition (its stage then reports ~0 ms)")
    parser.add_argument('-L', action='append', type=str, dest='sweeps',
        help=("Set a list of values for a config key, e.g., \"model.n_stk=0,1,2,4\". "
              "The benchmark runs once for each of them."))
    parser.add_argument('--outfile', type=str,
        help="Append one CSV row per configuration to this file")
    parser.add_argument('--plot', type=str,
        help="Render the stage breakdown of the CSV file as a bar plot (needs --outfile)")
    add_config_args(parser)

    parser.set_defaults(func=_bench_command)


@handles_errors
def _bench_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    if args.repetitions is not None:
        config = config.override(f"run.bench_repetitions={args.repetitions}")
    if args.map_size * 4 % 32 != 0:
        fatal_error(f"--map-size must be a multiple of 8, got {args.map_size}")
    if args.plot and not args.outfile:
        fatal_error("--plot needs --outfile")

    steps = [ListSteps.parse(sweep) for sweep in args.sweeps or []]
    printer = None
    if args.outfile:
        printer = ResultPrinter(args.outfile, [step.key() for step in steps])

    def _runner(current):
        report = run_benchmark(current, args.map_size, det_only=args.det_only)
        for line in report.lines():
            print(line)
        return report

    run_sweep(config, steps, _runner, printer, logger)

    if args.plot:
        # seaborn is slow to import
        # pylint: disable-next=import-outside-toplevel
        from textspot.benchmark.plot import plot_stage_bars

        x_axis = steps[-1].key() if steps else None
        plot_stage_bars(args.outfile, args.plot, x_axis=x_axis)

    logger.close()
