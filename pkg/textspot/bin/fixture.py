''' Generate seeded synthetic scenes '''

from textspot.fixtures import make_adjacent_pair, make_scene

from .helper import add_config_args, fatal_error, handles_errors, make_logger, try_get_config


def set_up_fixture(subparsers):
    ''' Set up arguments for the `fixture` command '''

    parser = subparsers.add_parser('fixture',
        help="Write synthetic scenes: annotations, image, and idealized prediction maps")

    parser.add_argument('--seeds', type=str,
        help="Comma-separated seeds, one scene each. Defaults to run.seed")
    parser.add_argument('--count', type=int, default=3,
        help="Text instances per scene (fewer if they do not fit)")
    parser.add_argument('--map-size', type=int, default=40,
        help="Side of the stride-4 maps; the image is four times as large")
    parser.add_argument('--adjacent', action='store_true',
        help="Also write the scene with two text boxes two pixels apart")
    parser.add_argument('--out', type=str,
        help="Output folder. Defaults to paths.output from the config")
    add_config_args(parser)

    parser.set_defaults(func=_fixture_command)


def _parse_seeds(seeds: str) -> list[int]:
    try:
        return [int(seed) for seed in seeds.split(',')]
    except ValueError:
        fatal_error(f'Seeds must be comma-separated integers, got "{seeds}"')


@handles_errors
def _fixture_command(args):
    config = try_get_config(args)
    logger = make_logger(args, config)

    seeds = _parse_seeds(args.seeds) if args.seeds else [config.run.seed]
    if args.count < 1:
        fatal_error(f"--count must be positive, got {args.count}")

    out_dir = args.out or config.paths.output
    scenes = [make_scene(seed, args.map_size, args.map_size, args.count,
                         emb_dim=config.model.emb_dim, delta_dis=config.loss.delta_dis,
                         rate=config.run.shrink_rate) for seed in seeds]
    if args.adjacent:
        scenes.append(make_adjacent_pair(config.model.emb_dim, config.loss.delta_dis,
                                         rate=config.run.shrink_rate))

    for scene in scenes:
        for path in scene.write(out_dir):
            logger.log_info(f"Wrote {path}")
        logger.log_meta(f"{scene.name}: {len(scene.annotations)} text instance(s)")

    logger.close()
