"""
Django management command reconstructing images from a stored frame stack.
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from imaging.exceptions import ImagingError
from imaging.experiment import reconstruct_stack
from imaging.objects import load_object

from ._options import add_experiment_arguments, build_config

logger = logging.getLogger('imaging')


class Command(BaseCommand):
    help = 'Reconstruct every configured method from a frame stack file'

    def add_arguments(self, parser):
        parser.add_argument('stack', help='Frame stack file written by simulate or compare --emit-stack')
        add_experiment_arguments(parser)
        parser.add_argument(
            '--score-against',
            dest='score_against',
            default=None,
            help='PGM/PNG object to compute Corr against; overrides --object',
        )

    def handle(self, *args, **options):
        config = build_config(options)
        # Corr needs an object: an explicit file, or --object built on the stack's grid
        score_object = options['object'] is not None
        try:
            target = load_object(options['score_against']) if options['score_against'] else None
            reports = reconstruct_stack(config, options['stack'], target=target, score_object=score_object)
        except ImagingError as e:
            logger.error(f"Reconstruction from {options['stack']} failed: {e}")
            raise CommandError(str(e))

        for report in reports:
            score = 'n/a' if report.corr is None else f"{report.corr:.4f}"
            self.stdout.write(f"{report.method:<14} K = {report.count}  Corr = {score}")
        self.stdout.write(self.style.SUCCESS(f"Reconstructions written to {config.output_dir}"))
