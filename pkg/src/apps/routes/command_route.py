import argparse


def _add_train_flags(parser, needs_segmenter=False, needs_rankings=False):
    parser.add_argument('--config', help='JSON file with TrainConfig fields')
    parser.add_argument('--dataset', help='dataset root (overrides dataset_root)')
    parser.add_argument('--out-dir', dest='out_dir', help='checkpoint directory (overrides out_dir)')
    parser.add_argument('--steps', type=int, help='number of training steps (overrides steps)')
    parser.add_argument('--resume', help='checkpoint to continue from')
    if needs_segmenter:
        parser.add_argument('--segmenter', help='segmenter checkpoint')
    if needs_rankings:
        parser.add_argument('--rankings', help='rankings JSON written by `rank`')


def build_parser(controller):
    """
    Maps every command name and its flags to a controller method (stored as `handler`).
    `--seed` and `--verbose` are accepted before or after the command name.
    """
    parser = argparse.ArgumentParser(prog='seg2eye', description='Semi-supervised eye image synthesis pipeline.')
    parser.add_argument('--seed', type=int, default=None, help='seed for every sampling decision (default 0)')
    parser.add_argument('--verbose', action='store_true', help='log at DEBUG level')
    # suppressed defaults keep a value given before the command from being reset
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument('--verbose', action='store_true', default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    commands = parser.add_subparsers(dest='command', required=True, metavar='command')

    p = commands.add_parser('synth-data', parents=[common], help='render the procedural eye dataset')
    p.add_argument('--config', help='JSON file with DatasetConfig fields')
    p.add_argument('--out', help='dataset root (overrides root)')
    p.set_defaults(handler=controller.synth_data)

    p = commands.add_parser('train-seg', parents=[common], help='train the segmenter')
    _add_train_flags(p)
    p.set_defaults(handler=controller.train_seg)

    p = commands.add_parser('pseudo-label', parents=[common], help='cache segmenter pseudo-labels for unlabeled images')
    p.add_argument('--dataset', required=True)
    p.add_argument('--segmenter', required=True)
    p.set_defaults(handler=controller.pseudo_label)

    p = commands.add_parser('rank', parents=[common], help='rank same-person unlabeled images by mask similarity')
    p.add_argument('--dataset', required=True)
    p.add_argument('--segmenter', required=True)
    p.add_argument('--out', required=True, help='rankings JSON')
    p.add_argument('--target-mask', dest='target_mask', help='rank a single mask instead of every labeled record')
    p.add_argument('--person', type=int, help='person whose pool --target-mask is ranked against')
    p.add_argument('--class-means-out', dest='class_means_out', help='also write the class means JSON')
    p.set_defaults(handler=controller.rank)

    p = commands.add_parser('train-refiner', parents=[common], help='train the residual refiner')
    _add_train_flags(p, needs_segmenter=True, needs_rankings=True)
    p.set_defaults(handler=controller.train_refiner)

    p = commands.add_parser('train-gan', parents=[common], help='train the generator, discriminator and style encoder')
    _add_train_flags(p, needs_segmenter=True, needs_rankings=True)
    p.set_defaults(handler=controller.train_gan)

    p = commands.add_parser('generate', parents=[common], help='generate an image from a mask and style images')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--mask', required=True)
    p.add_argument('--style-images', dest='style_images', nargs='+', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--target', help='print the challenge metric against this image')
    p.set_defaults(handler=controller.generate)

    p = commands.add_parser('interpolate', parents=[common], help='decode a linear walk between two style codes')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--mask', required=True)
    p.add_argument('--style-a', dest='style_a', nargs='+', required=True)
    p.add_argument('--style-b', dest='style_b', nargs='+', required=True)
    p.add_argument('--steps', type=int, default=8)
    p.add_argument('--out-dir', dest='out_dir', required=True)
    p.set_defaults(handler=controller.interpolate)

    p = commands.add_parser('refine', parents=[common], help='refine a reference image towards a target mask')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--target-mask', dest='target_mask', required=True)
    p.add_argument('--reference', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--residual-out', dest='residual_out', help='write the residual map (0 at gray 128)')
    p.add_argument('--ref-mask', dest='ref_mask', help='mask of the reference; predicted by --segmenter if absent')
    p.add_argument('--segmenter')
    p.set_defaults(handler=controller.refine)

    p = commands.add_parser('evaluate', parents=[common], help='challenge metric over same-named PNG pairs')
    p.add_argument('--pred-dir', dest='pred_dir', required=True)
    p.add_argument('--target-dir', dest='target_dir', required=True)
    p.set_defaults(handler=controller.evaluate)

    return parser
