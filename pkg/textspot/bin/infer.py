''' Run the full spotting pipeline on image tensors '''

import os

from textspot.geometry import write_annotations
from textspot.pa import instances_to_label_map
from textspot.pipeline import Pipeline, PipelineResult, load_charset, load_weights
from textspot.pipeline import pad_to_multiple, prepare_image
from textspot.tensor import read_ptm, write_ptm

from .helper import add_config_args, handles_errors, make_logger, try_get_config


def set_up_infer(subparsers):
    ''' Set up arguments for the `infer` command '''

    parser = subparsers.add_parser('infer',
        help="Detect (and recognize) text in [3,H,W] image PTM files")

    parser.add_argument('images', nargs='+', help="Image PTM files")
    parser.add_argument('--det-only', action='store_true',
        help="Skip recognition; transcriptions stay empty")
    parser.add_argument('--short-side', type=int,
        help="Resize so the shorter side has (about) this many pixels")
    parser.add_argument('--pad', action='store_true',
        help="Zero-pad images whose sides are not divisible by 32")
    parser.add_argument('--out', type=str,
        help="Output folder. Defaults to paths.output from the config")
    add_config_args(parser)

    parser.set_defaults(func=_infer_command)


def write_result(out_dir: str, name: str, result: PipelineResult) -> list[str]:
    ''' Store prediction maps, annotations and the instance map of one image '''
    detection = result.detection
    paths = []
    for (suffix, tensor) in (("p_tex", detection.p_tex), ("p_ker", detection.p_ker),
                             ("emb", detection.emb)):
        path = os.path.join(out_dir, f"{name}_{suffix}.ptm")
        write_ptm(path, tensor)
        paths.append(path)

    (_, height, width) = detection.p_tex.dims
    path = os.path.join(out_dir, f"{name}_instances.ptm")
    write_ptm(path, instances_to_label_map(result.instances, height, width).to_tensor())
    paths.append(path)

    path = os.path.join(out_dir, f"{name}.txt")
    write_annotations(path, [(instance.image_contour, instance.transcription,
                              instance.confidence) for instance in result.instances])
    paths.append(path)
    return paths


@handles_errors
def _infer_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    charset = load_charset(config)
    weights = load_weights(config, charset, with_recognition=not args.det_only)
    pipeline = Pipeline(config, weights, charset, logger)
    out_dir = args.out or config.paths.output

    for path in args.images:
        image = read_ptm(path)
        if args.short_side:
            image = prepare_image(image, args.short_side)
        elif args.pad:
            image = pad_to_multiple(image)

        result = pipeline.run(image, det_only=args.det_only)
        name = os.path.splitext(os.path.basename(path))[0]
        write_result(out_dir, name, result)

        logger.log_meta(f"{name}: {len(result.instances)} instance(s) in "
                        f"{result.total_ms:.1f} ms")

    logger.close()
