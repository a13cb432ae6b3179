''' Pixel Aggregation on stored prediction maps '''

import os

from textspot.benchmark import benchmark_aggregation
from textspot.geometry import write_annotations
from textspot.pa import aggregate, instances_to_label_map
from textspot.tensor import read_ptm, write_ptm

from .helper import add_config_args, fatal_error, handles_errors, make_logger, try_get_config


def set_up_postprocess(subparsers):
    ''' Set up arguments for the `postprocess` command '''

    parser = subparsers.add_parser('postprocess',
        help="Aggregate text pixels into instances from p_tex, p_ker and emb PTM files")

    parser.add_argument('p_tex', help="[1,H,W] text region probabilities")
    parser.add_argument('p_ker', help="[1,H,W] text kernel probabilities")
    parser.add_argument('emb', help="[D,H,W] instance vectors")
    parser.add_argument('--name', type=str, default="instances",
        help="Base name of the output files")
    parser.add_argument('--out', type=str,
        help="Output folder. Defaults to paths.output from the config")
    parser.add_argument('--bench', type=int, metavar='N',
        help="Also repeat the aggregation N times and report its timing")
    add_config_args(parser)

    parser.set_defaults(func=_postprocess_command)


@handles_errors
def _postprocess_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    p_tex = read_ptm(args.p_tex)
    p_ker = read_ptm(args.p_ker)
    emb = read_ptm(args.emb)

    instances = aggregate(p_tex, p_ker, emb, config.pa)
    out_dir = args.out or config.paths.output

    (_, height, width) = p_tex.dims
    write_ptm(os.path.join(out_dir, f"{args.name}.ptm"),
              instances_to_label_map(instances, height, width).to_tensor())
    write_annotations(os.path.join(out_dir, f"{args.name}.txt"),
                      [(instance.image_contour, "", instance.confidence)
                       for instance in instances])

    logger.log_meta(f"Found {len(instances)} text instance(s)")

    if args.bench is not None:
        if args.bench < 1:
            fatal_error(f"--bench needs at least one repetition, got {args.bench}")

        stats = benchmark_aggregation(p_tex, p_ker, emb, config, args.bench)
        print(f"repetitions={args.bench}")
        print(f"mean_ms={stats.mean:.4f}")
        print(f"p50_ms={stats.p50:.4f}")
        print(f"p99_ms={stats.p99:.4f}")

    logger.close()
