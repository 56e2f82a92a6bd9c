"""
Flags shared by the imaging management commands.

Every flag defaults to None so that only values given on the command line
override the config file and ``settings.IMAGING_DEFAULTS``.
"""

from django.core.management.base import CommandError

from imaging.config import BUILTIN_OBJECTS, ExperimentConfig
from imaging.exceptions import ImagingError

# (flag, config key, type, help)
EXPERIMENT_FLAGS = (
    ('--size', 'size', str, 'Frame size N or ROWSxCOLS in pixels'),
    ('--frames', 'frames', int, 'Number of measurements K per seed'),
    ('--seed', 'seed', int, 'First random seed'),
    ('--repeats', 'repeats', int, 'Number of consecutive seeds to run'),
    ('--grain-sigma', 'grain_sigma', float, 'Speckle grain size (Gaussian kernel sigma, pixels)'),
    ('--mean-intensity', 'mean_intensity', float, 'Mean speckle intensity'),
    ('--noise-std', 'noise_std', float, 'Standard deviation of additive bucket noise'),
    ('--block', 'block', str, 'Point-by-point block size k1xk2'),
    ('--alpha', 'alpha', float, 'Harmonic factor for point-by-point binarization'),
    ('--levels', 'levels', int, 'Quantization levels for Otsu thresholds'),
    ('--object', 'object', str, f"Object: {' or '.join(BUILTIN_OBJECTS)} or a PGM/PNG path"),
    ('--pitch-mm', 'pitch_mm', float, 'Pixel pitch of the object plane in millimetres'),
    ('--slit-width-mm', 'slit_width_mm', float, 'Double-slit width in millimetres'),
    ('--separation-mm', 'separation_mm', float, 'Double-slit centre-to-centre separation in millimetres'),
    ('--slit-height', 'slit_height', int, 'Double-slit height in pixels'),
    ('--orientation', 'orientation', str, 'Double-slit orientation: vertical or horizontal'),
    ('--methods', 'methods', str, 'Comma separated methods: tgi, mbgi, obgi, ppbgi, ppbgi:<alpha>'),
    ('--workers', 'workers', int, 'Worker threads'),
    ('--out', 'out', str, 'Output directory'),
)


def add_experiment_arguments(parser, skip=()):
    parser.add_argument('--config', help='Flat key = value config file')
    for flag, key, kind, help_text in EXPERIMENT_FLAGS:
        if key not in skip:
            parser.add_argument(flag, dest=key, type=kind, default=None, help=help_text)
    parser.add_argument('--timing', action='store_const', const=True, default=None,
                        help='Record per-method wall time in the CSV')
    parser.add_argument('--compensated', action='store_const', const=True, default=None,
                        help='Use compensated (Kahan) summation in the correlation accumulators')


def build_config(options, extra=None) -> ExperimentConfig:
    """Turn parsed options into a validated ExperimentConfig."""
    overrides = {key: options.get(key) for _flag, key, _kind, _help in EXPERIMENT_FLAGS}
    overrides['timing'] = options.get('timing')
    overrides['compensated'] = options.get('compensated')
    overrides.update(extra or {})
    try:
        return ExperimentConfig.from_mapping(overrides, config_file=options.get('config'))
    except ImagingError as e:
        raise CommandError(str(e))
