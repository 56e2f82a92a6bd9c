"""
Django management command measuring speckle grain size before and after
binarization.
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from imaging.exceptions import ImagingError
from imaging.experiment import speckle_stats

from ._options import add_experiment_arguments, build_config

logger = logging.getLogger('imaging')


class Command(BaseCommand):
    help = 'Report speckle grain size and fill fraction of raw and binarized frames'

    def add_arguments(self, parser):
        add_experiment_arguments(parser, skip=('methods', 'object', 'noise_std'))

    def handle(self, *args, **options):
        config = build_config(options)
        try:
            reports = speckle_stats(config)
        except ImagingError as e:
            logger.error(f"Speckle statistics failed: {e}")
            raise CommandError(str(e))

        self.stdout.write("\n" + "=" * 50)
        self.stdout.write("SPECKLE STATISTICS:")
        for report in reports:
            grain = 'n/a' if report.grain_fwhm_px is None else f"{report.grain_fwhm_px:.3f} px"
            fill = '' if report.fill_fraction is None else f"  fill {report.fill_fraction:.3f}"
            self.stdout.write(f"  seed {report.seed} {report.method:<14} grain {grain}{fill}")
        self.stdout.write(self.style.SUCCESS(f"Statistics written to {config.output_dir}"))
