''' Score predictions against ground truth annotations '''

import os

from textspot.eval import IOU_THRESHOLD, EvalSample, evaluate_dataset
from textspot.geometry import read_annotations
from textspot.util import atomic_write

from .helper import EXIT_DATA, add_config_args, fatal_error, handles_errors, make_logger
from .helper import try_get_config


def set_up_eval(subparsers):
    ''' Set up arguments for the `eval` command '''

    parser = subparsers.add_parser('eval',
        help="Compute detection and end-to-end precision/recall/F-measure and the AED")

    parser.add_argument('gt_dir', help="Folder of ground truth annotation files")
    parser.add_argument('pred_dir',
        help="Folder of prediction annotation files with the same names")
    parser.add_argument('--iou', type=float, default=IOU_THRESHOLD,
        help="IoU needed for a match")
    parser.add_argument('--case-sensitive', action='store_true',
        help="Compare transcriptions without lowercasing them")
    parser.add_argument('--report', type=str,
        help="Also write the key=value report to this file")
    parser.add_argument('--csv', type=str,
        help="Write per-image scores to this CSV file")
    add_config_args(parser)

    parser.set_defaults(func=_eval_command)


def load_samples(gt_dir: str, pred_dir: str) -> list[EvalSample]:
    ''' Pair every ground truth file with its prediction file (missing means empty) '''
    for folder in (gt_dir, pred_dir):
        if not os.path.isdir(folder):
            fatal_error(f'No such folder "{folder}"', EXIT_DATA)

    samples = []
    for name in sorted(os.listdir(gt_dir)):
        if not name.endswith(".txt"):
            continue

        pred_path = os.path.join(pred_dir, name)
        preds = read_annotations(pred_path) if os.path.isfile(pred_path) else []
        samples.append(EvalSample(os.path.splitext(name)[0],
                                  read_annotations(os.path.join(gt_dir, name)), preds))
    return samples


def format_report(values: dict[str, float]) -> str:
    ''' One key=value line per score '''
    lines = []
    for (key, value) in values.items():
        lines.append(f"{key}={value:.6f}" if isinstance(value, float) else f"{key}={value}")
    return ''.join(f"{line}\n" for line in lines)


@handles_errors
def _eval_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    if not 0.0 < args.iou <= 1.0:
        fatal_error(f"IoU threshold must be within (0, 1], got {args.iou}")

    samples = load_samples(args.gt_dir, args.pred_dir)
    logger.log_info(f"Evaluating {len(samples)} image(s)")

    report = evaluate_dataset(samples, args.iou, args.case_sensitive, config.run.workers)
    text = format_report(report.to_dict())
    print(text, end='')

    if args.report:
        atomic_write(args.report, text)
    if args.csv:
        atomic_write(args.csv, report.to_frame().to_csv(index=False))
        logger.log_info(f'Wrote per-image scores to "{args.csv}"')

    logger.close()
