"""
Django management command writing measurement runs to frame stack files.
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from imaging.exceptions import ImagingError
from imaging.experiment import simulate

from ._options import add_experiment_arguments, build_config

logger = logging.getLogger('imaging')


class Command(BaseCommand):
    help = 'Simulate speckle frames and bucket readings and store them as frame stacks'

    def add_arguments(self, parser):
        add_experiment_arguments(parser)

    def handle(self, *args, **options):
        config = build_config(options)
        try:
            paths = simulate(config)
        except ImagingError as e:
            logger.error(f"Simulation failed: {e}")
            raise CommandError(str(e))

        for path in paths:
            self.stdout.write(f"Wrote {path}")
        self.stdout.write(self.style.SUCCESS(f"Simulated {len(paths)} run(s) of {config.count} frames"))
