"""
Django management command comparing ghost-imaging reconstructions.
Runs TGI and the binarized variants on the same frame stream and scores each
against the object.
"""

import logging
from itertools import groupby

from django.core.management.base import BaseCommand, CommandError

from imaging.exceptions import ImagingError
from imaging.experiment import run_compare

from ._options import add_experiment_arguments, build_config

logger = logging.getLogger('imaging')


class Command(BaseCommand):
    help = 'Compare TGI, MBGI, OBGI and PPBGI reconstructions of one object'

    def add_arguments(self, parser):
        add_experiment_arguments(parser)
        parser.add_argument(
            '--emit-stack',
            dest='emit_stack',
            action='store_const',
            const=True,
            default=None,
            help='Also write each seed\'s frames and buckets as a frame stack',
        )

    def handle(self, *args, **options):
        config = build_config(options, extra={'emit_stack': options['emit_stack']})
        self.stdout.write(
            f"Comparing {', '.join(m.label for m in config.methods)} on "
            f"{config.speckle.rows}x{config.speckle.cols}, {config.count} frames, "
            f"seeds {config.seeds[0]}..{config.seeds[-1]}"
        )

        try:
            reports = run_compare(config)
        except ImagingError as e:
            logger.error(f"Comparison failed: {e}")
            raise CommandError(str(e))

        self.stdout.write("\n" + "=" * 50)
        self.stdout.write("COMPARISON SUMMARY:")
        for seed, rows in groupby(reports, key=lambda r: r.seed):
            ranked = sorted(rows, key=lambda r: -2.0 if r.corr is None else r.corr, reverse=True)
            self.stdout.write(f"Seed {seed}:")
            for report in ranked:
                score = 'n/a' if report.corr is None else f"{report.corr:.4f}"
                self.stdout.write(f"  {report.method:<14} Corr = {score}")

        self.stdout.write(f"Mean Corr over {len(config.seeds)} seed(s):")
        for method in config.methods:
            scores = [r.corr for r in reports if r.method == method.label and r.corr is not None]
            mean = f"{sum(scores) / len(scores):.4f}" if scores else 'n/a'
            self.stdout.write(f"  {method.label:<14} {mean}")
        self.stdout.write(self.style.SUCCESS(f"Results written to {config.output_dir}"))
