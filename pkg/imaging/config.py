"""
Experiment configuration.

Values come from three layers, later layers winning:

1. ``settings.IMAGING_DEFAULTS``
2. a flat config file (``key = value`` per line, ``#`` comments)
3. command-line flags

Config file keys are the long flag names with dashes replaced by underscores.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from django.conf import settings
from dotenv import dotenv_values

from .binarization import BinarizationMethod, BlockSpec
from .exceptions import DimensionError, ParameterError, StorageError
from .objects import DoubleSlitSpec, ObjectMask, load_object, make_double_slit, make_feathers
from .speckle import SpeckleParams

logger = logging.getLogger(__name__)

BUILTIN_OBJECTS = ('double-slit', 'feathers')

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off', ''}


def config_keys() -> Tuple[str, ...]:
    return tuple(settings.IMAGING_DEFAULTS)


def load_config_file(path) -> Dict[str, str]:
    """
    Parse a flat ``key = value`` config file.

    Args:
        path: Config file

    Returns:
        Mapping of key to raw string value
    """
    path = Path(path)
    if not path.is_file():
        raise StorageError("config file not found", path=path)
    values = dotenv_values(path, interpolate=False)
    known = set(config_keys())
    for key in values:
        if key not in known:
            raise ParameterError(f"unknown config key {key!r} in {path}")
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return {key: value for key, value in values.items() if value is not None}


def _as_int(key: str, value) -> int:
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be an integer, got {value!r}")
    if number != int(number):
        raise ParameterError(f"{key} must be an integer, got {value!r}")
    return int(number)


def _as_float(key: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be a number, got {value!r}")


def _as_bool(key: str, value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ParameterError(f"{key} must be true or false, got {value!r}")


def _as_size(value) -> Tuple[int, int]:
    text = str(value).lower().replace('*', 'x')
    parts = text.split('x')
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ParameterError(f"size must be N or ROWSxCOLS, got {value!r}")
    rows, cols = (_as_int('size', p) for p in parts)
    return rows, cols


@dataclass
class ExperimentConfig:
    """Everything one comparison, simulation or speckle-statistics run needs."""
    speckle: SpeckleParams
    object_source: str
    count: int
    methods: List[BinarizationMethod]
    output_dir: Path
    emit_stack: bool = False
    repeats: int = 1
    noise_std: float = 0.0
    block: BlockSpec = field(default_factory=lambda: BlockSpec(16, 16))
    alpha: float = 0.15
    levels: int = 256
    pitch_mm: float = 0.05
    slit_width_mm: float = 0.2
    separation_mm: float = 0.6
    slit_height: Optional[int] = None
    orientation: str = 'vertical'
    workers: int = 1
    timing: bool = False
    compensated: bool = False

    def __post_init__(self):
        if self.count < 2:
            raise ParameterError(f"frames must be >= 2, got {self.count}")
        if not self.methods:
            raise ParameterError("at least one method is required")
        if self.repeats < 1:
            raise ParameterError(f"repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        if self.noise_std < 0:
            raise ParameterError(f"noise_std must be >= 0, got {self.noise_std}")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ParameterError(f"methods repeat: {', '.join(labels)}")

    @classmethod
    def from_mapping(cls, overrides: Mapping = None, config_file=None) -> 'ExperimentConfig':
        """
        Build a validated config from defaults, an optional file and overrides.

        Args:
            overrides: Values that win over both defaults and the file; None values are ignored
            config_file: Optional flat config file

        Returns:
            ExperimentConfig
        """
        values = dict(settings.IMAGING_DEFAULTS)
        if config_file:
            values.update(load_config_file(config_file))
        for key, value in (overrides or {}).items():
            if key not in values:
                raise ParameterError(f"unknown setting {key!r}")
            if value is not None:
                values[key] = value

        rows, cols = _as_size(values['size'])
        block = values['block']
        block = block if isinstance(block, BlockSpec) else BlockSpec.parse(block)
        alpha = _as_float('alpha', values['alpha'])
        levels = _as_int('levels', values['levels'])

        methods = values['methods']
        if isinstance(methods, str):
            methods = [m for m in methods.split(',') if m.strip()]
        methods = [
            m if isinstance(m, BinarizationMethod) else BinarizationMethod.parse(m, block, alpha, levels)
            for m in methods
        ]

        slit_height = values['slit_height']
        if slit_height in ('', 'none', 'None'):
            slit_height = None

        return cls(
            speckle=SpeckleParams(
                rows=rows,
                cols=cols,
                grain_sigma=_as_float('grain_sigma', values['grain_sigma']),
                mean_intensity=_as_float('mean_intensity', values['mean_intensity']),
                seed=_as_int('seed', values['seed']),
            ),
            object_source=str(values['object']),
            count=_as_int('frames', values['frames']),
            methods=methods,
            output_dir=Path(values['out']),
            emit_stack=_as_bool('emit_stack', values['emit_stack']),
            repeats=_as_int('repeats', values['repeats']),
            noise_std=_as_float('noise_std', values['noise_std']),
            block=block,
            alpha=alpha,
            levels=levels,
            pitch_mm=_as_float('pitch_mm', values['pitch_mm']),
            slit_width_mm=_as_float('slit_width_mm', values['slit_width_mm']),
            separation_mm=_as_float('separation_mm', values['separation_mm']),
            slit_height=None if slit_height is None else _as_int('slit_height', slit_height),
            orientation=str(values['orientation']),
            workers=_as_int('workers', values['workers']),
            timing=_as_bool('timing', values['timing']),
            compensated=_as_bool('compensated', values['compensated']),
        )

    @property
    def seeds(self) -> List[int]:
        return [self.speckle.seed + offset for offset in range(self.repeats)]

    def params_for_seed(self, seed: int) -> SpeckleParams:
        return SpeckleParams(
            rows=self.speckle.rows,
            cols=self.speckle.cols,
            grain_sigma=self.speckle.grain_sigma,
            mean_intensity=self.speckle.mean_intensity,
            seed=seed,
        )

    def for_shape(self, shape: Tuple[int, int]) -> 'ExperimentConfig':
        """Same settings on a different frame grid."""
        rows, cols = shape
        return replace(self, speckle=replace(self.speckle, rows=rows, cols=cols))

    def build_object(self) -> ObjectMask:
        """
        Construct or load the object named by ``object_source``.

        Raises:
            DimensionError: The loaded object's shape differs from the speckle grid
        """
        rows, cols = self.speckle.shape
        if self.object_source == 'double-slit':
            spec = DoubleSlitSpec.from_millimetres(
                rows, cols,
                slit_width_mm=self.slit_width_mm,
                separation_mm=self.separation_mm,
                pitch_mm=self.pitch_mm,
                slit_height_px=self.slit_height,
                orientation=self.orientation,
            )
            return make_double_slit(spec)
        if self.object_source == 'feathers':
            return make_feathers(rows, cols)

        mask = load_object(self.object_source)
        if mask.shape != self.speckle.shape:
            raise DimensionError(
                f"object {self.object_source} is {mask.shape[0]}x{mask.shape[1]}, "
                f"speckle grid is {rows}x{cols}"
            )
        return mask
