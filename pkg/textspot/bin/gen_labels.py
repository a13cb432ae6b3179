''' Turn annotation files into supervision maps '''

import os

from multiprocessing import Pool

from textspot.geometry import read_annotations
from textspot.labelgen import generate_labels
from textspot.tensor import write_ptm

from .helper import add_config_args, fatal_error, handles_errors, make_logger, try_get_config
from .helper import EXIT_DATA


def set_up_gen_labels(subparsers):
    ''' Set up arguments for the `gen-labels` command '''

    parser = subparsers.add_parser('gen-labels',
        help="Generate text region, kernel, instance and ignore maps from annotations")

    parser.add_argument('inputs', nargs='+',
        help="Annotation files, or folders containing *.txt annotation files")
    parser.add_argument('--height', type=int, required=True,
        help="Height of the annotated image in pixels")
    parser.add_argument('--width', type=int, required=True,
        help="Width of the annotated image in pixels")
    parser.add_argument('--scale', type=float, default=1.0,
        help="Scale polygons and canvas, e.g., 0.25 for stride-4 loss inputs")
    parser.add_argument('--out', type=str,
        help="Output folder. Defaults to paths.output from the config")
    add_config_args(parser)

    parser.set_defaults(func=_gen_labels_command)


def collect_files(inputs: list[str], suffix: str = ".txt") -> list[str]:
    ''' Expand folders into their files with the given suffix, sorted by name '''
    result = []
    for path in inputs:
        if os.path.isdir(path):
            result += sorted(os.path.join(path, name) for name in os.listdir(path)
                             if name.endswith(suffix))
        elif os.path.isfile(path):
            result.append(path)
        else:
            fatal_error(f'No such file or folder "{path}"', EXIT_DATA)
    return result


def _label_job(job: tuple[str, str, int, int, float, float]) -> list[str]:
    (path, out_dir, height, width, scale, rate) = job

    annotations = [annotation.scaled(scale) for annotation in read_annotations(path)]
    labels = generate_labels(annotations, height, width, rate)

    stem = os.path.splitext(os.path.basename(path))[0]
    written = []
    for (name, tensor) in labels.to_tensors().items():
        target = os.path.join(out_dir, f"{stem}_{name}.ptm")
        write_ptm(target, tensor)
        written.append(target)
    return written


@handles_errors
def _gen_labels_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    if args.scale <= 0:
        fatal_error(f"Scale must be positive, got {args.scale}")
    height = max(1, int(round(args.height * args.scale)))
    width = max(1, int(round(args.width * args.scale)))

    out_dir = args.out or config.paths.output
    files = collect_files(args.inputs)
    jobs = [(path, out_dir, height, width, args.scale, config.run.shrink_rate)
            for path in files]

    logger.log_meta(f"Generating {height}x{width} labels for {len(jobs)} file(s)")

    if config.run.workers > 1 and len(jobs) > 1:
        with Pool(config.run.workers) as pool:
            results = pool.map(_label_job, jobs)
    else:
        results = [_label_job(job) for job in jobs]

    for written in results:
        for path in written:
            logger.log_info(f"Wrote {path}")

    logger.log_meta(f"☑️ Wrote {sum(len(written) for written in results)} label maps "
                    f'to "{out_dir}"')
    logger.close()
