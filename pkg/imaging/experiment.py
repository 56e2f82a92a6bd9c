"""
Experiment orchestration behind the management commands.

Every method of a comparison consumes the same seeded frame stream: each
frame is generated once, binarized once per method and fed to that method's
accumulator. Seeds are independent and may run on a thread pool; within a
single seed the frame range can be sharded across accumulators and merged.
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .binarization import BinarizationMethod, BinaryFrame, binarize_with_method
from .config import ExperimentConfig
from .exceptions import DimensionError, StorageError, UndefinedMetricError
from .metrics import MetricsReport, corr, fill_fraction, grain_fwhm
from .objects import ObjectMask, save_object
from .pgm import write_pgm
from .reconstruction import CorrelationAccumulator, Reconstruction, merge_all, normalize_display
from .speckle import MeasurementRun, generate_run
from .stack_io import read_stack, write_stack

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('method', 'seed', 'count', 'corr', 'fill_fraction', 'grain_fwhm_px', 'wall_ms')

# Frames per run used for grain-size and fill-fraction statistics.
GRAIN_SAMPLE_FRAMES = 10

# Harmonic factors compared by the speckle statistics run.
SPECKLE_STATS_ALPHAS = (0.15, 0.4)


@dataclass
class MethodState:
    """Accumulator and running statistics of one method within one shard."""
    method: BinarizationMethod
    accumulator: CorrelationAccumulator
    fill_total: float = 0.0
    grain_total: float = 0.0
    sampled: int = 0
    grain_sampled: int = 0
    elapsed: float = 0.0

    def merge(self, other: 'MethodState') -> 'MethodState':
        return MethodState(
            method=self.method,
            accumulator=self.accumulator.merge(other.accumulator),
            fill_total=self.fill_total + other.fill_total,
            grain_total=self.grain_total + other.grain_total,
            sampled=self.sampled + other.sampled,
            grain_sampled=self.grain_sampled + other.grain_sampled,
            elapsed=self.elapsed + other.elapsed,
        )


@dataclass
class SeedResult:
    """Reconstructions and scores of one seed."""
    seed: int
    reports: List[MetricsReport]
    reconstructions: Dict[str, Reconstruction] = field(default_factory=dict)


def sampled_grain(frame) -> Optional[float]:
    """Grain size of a frame, or None for a constant frame."""
    try:
        return grain_fwhm(frame)
    except UndefinedMetricError:
        logger.debug(f"Skipping grain size of constant frame {getattr(frame, 'frame_index', '?')}")
        return None


def accumulate(run: MeasurementRun, methods: Sequence[BinarizationMethod],
               start: int = 0, stop: Optional[int] = None, timing: bool = False,
               compensated: bool = False) -> List[MethodState]:
    """
    Feed frames [start, stop) of a run to one accumulator per method.

    Grain size and fill fraction are sampled on the first GRAIN_SAMPLE_FRAMES
    frames of the run.
    """
    states = [MethodState(m, CorrelationAccumulator.new(run.shape, compensated)) for m in methods]
    for frame, bucket in run.pairs(start, stop):
        sample = frame.frame_index < GRAIN_SAMPLE_FRAMES
        for state in states:
            began = time.perf_counter() if timing else 0.0
            ref = binarize_with_method(frame, state.method)
            state.accumulator.update(bucket, ref)
            if timing:
                state.elapsed += time.perf_counter() - began
            if sample:
                state.sampled += 1
                grain = sampled_grain(ref)
                if grain is not None:
                    state.grain_sampled += 1
                    state.grain_total += grain
                if isinstance(ref, BinaryFrame):
                    state.fill_total += fill_fraction(ref)
    return states


def accumulate_sharded(run: MeasurementRun, methods: Sequence[BinarizationMethod], shards: int,
                       executor: Optional[ThreadPoolExecutor] = None,
                       timing: bool = False, compensated: bool = False) -> List[MethodState]:
    """
    Split the run into contiguous frame ranges, accumulate each separately and
    merge the partial results in range order.
    """
    shards = max(1, min(shards, run.count))
    bounds = np.linspace(0, run.count, shards + 1).astype(int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if executor is None or shards == 1:
        partials = [accumulate(run, methods, a, b, timing, compensated) for a, b in ranges]
    else:
        futures = [executor.submit(accumulate, run, methods, a, b, timing, compensated) for a, b in ranges]
        partials = [f.result() for f in futures]
    return [merge_all(states) for states in zip(*partials)]


def _score(state: MethodState, seed: int, target: Optional[ObjectMask], timing: bool):
    reconstruction = state.accumulator.finalize(method=state.method.tag)
    score = None
    if target is not None:
        try:
            score = corr(reconstruction, target)
        except UndefinedMetricError as e:
            logger.warning(f"Seed {seed} {state.method.label}: Corr left empty ({e})")
    binary = state.method.tag != 'none'
    report = MetricsReport(
        method=state.method.label,
        seed=seed,
        count=reconstruction.count,
        corr=score,
        fill_fraction=state.fill_total / state.sampled if binary and state.sampled else None,
        grain_fwhm_px=state.grain_total / state.grain_sampled if state.grain_sampled else None,
        wall_ms=state.elapsed * 1000.0 if timing else None,
    )
    return report, reconstruction


def _seed_dir(config: ExperimentConfig, seed: int) -> Path:
    return Path(config.output_dir) / f"seed_{seed}"


def write_reconstruction(reconstruction: Reconstruction, path) -> Path:
    """Write a reconstruction as an 8-bit min-max stretched PGM."""
    return write_pgm(normalize_display(reconstruction), path, maxval=255)


def write_metrics_csv(reports: Sequence[MetricsReport], path) -> Path:
    """Write one CSV row per report with the fixed column order."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator='\n')
            writer.writeheader()
            for report in reports:
                writer.writerow(report.as_row())
    except OSError as e:
        raise StorageError(f"cannot write metrics ({e.strerror})", path=path)
    logger.info(f"Wrote {len(reports)} metric rows to {path}")
    return path


def _accumulate_run(config: ExperimentConfig, run: MeasurementRun, seed: int,
                    executor: Optional[ThreadPoolExecutor] = None) -> List[MethodState]:
    if executor is not None:
        states = accumulate_sharded(run, config.methods, config.workers, executor,
                                    config.timing, config.compensated)
    else:
        states = accumulate(run, config.methods, timing=config.timing, compensated=config.compensated)
    variance = states[0].accumulator.bucket_variance()
    logger.info(f"Seed {seed}: bucket mean {states[0].accumulator.sum_bucket / run.count:.6g}, "
                f"variance {variance:.6g}")
    return states


def compare_seed(config: ExperimentConfig, target: ObjectMask, seed: int,
                 executor: Optional[ThreadPoolExecutor] = None) -> SeedResult:
    """Run every configured method over one seeded frame stream."""
    params = config.params_for_seed(seed)
    run = generate_run(params, target, config.count, noise_std=config.noise_std)
    logger.info(f"Seed {seed}: {config.count} frames, methods "
                f"{', '.join(m.label for m in config.methods)}")

    states = _accumulate_run(config, run, seed, executor)

    result = SeedResult(seed=seed, reports=[])
    for state in states:
        report, reconstruction = _score(state, seed, target, config.timing)
        result.reports.append(report)
        result.reconstructions[report.method] = reconstruction
        logger.info(f"Seed {seed} {report.method}: Corr = {report.corr}")

    scored = [r for r in result.reports if r.corr is not None]
    if scored:
        ranking = sorted(scored, key=lambda r: r.corr, reverse=True)
        logger.info(f"Seed {seed} ranking: {' > '.join(r.method for r in ranking)}")

    seed_dir = _seed_dir(config, seed)
    for label, reconstruction in result.reconstructions.items():
        write_reconstruction(reconstruction, seed_dir / f"{label}.pgm")
    if config.emit_stack:
        write_stack(run, seed_dir / 'frames.gifs')
    return result


def _for_each_seed(config: ExperimentConfig, task) -> list:
    """
    Run ``task(seed, executor)`` for every seed, returning results in seed order.

    With several seeds and workers the seeds run concurrently; with a single
    seed the workers shard its frames instead.
    """
    if config.workers == 1:
        return [task(seed, None) for seed in config.seeds]
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        if len(config.seeds) == 1:
            return [task(config.seeds[0], executor)]
        futures = [executor.submit(task, seed, None) for seed in config.seeds]
        return [f.result() for f in futures]


def run_compare(config: ExperimentConfig) -> List[MetricsReport]:
    """
    Four-method (or configured-method) comparison over all seeds.

    Writes ``object.pgm``, ``seed_<s>/<method>.pgm`` per reconstruction,
    optional ``seed_<s>/frames.gifs`` stacks and ``metrics.csv``.

    Returns:
        One MetricsReport per (method, seed), seeds ascending
    """
    target = config.build_object()
    output_dir = Path(config.output_dir)
    save_object(target, output_dir / 'object.pgm')

    results = _for_each_seed(config, lambda seed, ex: compare_seed(config, target, seed, ex))
    reports = [report for result in results for report in result.reports]
    write_metrics_csv(reports, output_dir / 'metrics.csv')
    return reports


def simulate(config: ExperimentConfig) -> List[Path]:
    """Write one frame stack per seed without reconstructing."""
    target = config.build_object()

    def task(seed, _executor):
        run = generate_run(config.params_for_seed(seed), target, config.count, noise_std=config.noise_std)
        return write_stack(run, _seed_dir(config, seed) / 'frames.gifs')

    return _for_each_seed(config, task)


def reconstruct_stack(config: ExperimentConfig, stack_path, target: Optional[ObjectMask] = None,
                      score_object: bool = False) -> List[MetricsReport]:
    """
    Reconstruct every configured method from a stored frame stack.

    Args:
        config: Methods, output directory and the seed recorded in the CSV
        stack_path: Frame stack file
        target: Object to score against
        score_object: Without a target, build the configured object on the
            stack's grid and score against it; otherwise Corr is left empty

    Returns:
        One MetricsReport per method
    """
    run = read_stack(stack_path)
    seed = config.speckle.seed
    if target is None and score_object:
        target = config.for_shape(run.shape).build_object()
    if target is not None and target.shape != run.shape:
        raise DimensionError(f"object shape {target.shape} does not match stack frames {run.shape}")

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            states = _accumulate_run(config, run, seed, executor)
    else:
        states = _accumulate_run(config, run, seed)

    reports = []
    for state in states:
        report, reconstruction = _score(state, seed, target, config.timing)
        reports.append(report)
        write_reconstruction(reconstruction, Path(config.output_dir) / f"{report.method}.pgm")
    write_metrics_csv(reports, Path(config.output_dir) / 'metrics.csv')
    return reports


def speckle_stats_methods(config: ExperimentConfig) -> List[BinarizationMethod]:
    """Mean, Otsu and point-by-point at each compared harmonic factor."""
    methods = [BinarizationMethod('mean', levels=config.levels),
               BinarizationMethod('otsu', levels=config.levels)]
    methods += [BinarizationMethod('point_by_point', block=config.block, alpha=alpha, levels=config.levels)
                for alpha in SPECKLE_STATS_ALPHAS]
    return methods


def speckle_stats_seed(config: ExperimentConfig, seed: int) -> List[MetricsReport]:
    """Grain size and fill fraction of raw and binarized frames for one seed."""
    params = config.params_for_seed(seed)
    # The object does not affect reference frames; an open aperture keeps the run valid.
    aperture = ObjectMask(transmission=np.ones(params.shape), label='open')
    run = generate_run(params, aperture, config.count)
    methods = speckle_stats_methods(config)

    raw_grain = []
    totals = {m.label: ([], []) for m in methods}
    seed_dir = _seed_dir(config, seed)
    for frame, _bucket in run.pairs():
        grain = sampled_grain(frame)
        if grain is not None:
            raw_grain.append(grain)
        if frame.frame_index == 0:
            write_pgm(normalize_display(frame.intensity), seed_dir / 'speckle_raw.pgm', maxval=255)
        for method in methods:
            binary = binarize_with_method(frame, method)
            fills, grains = totals[method.label]
            fills.append(fill_fraction(binary))
            grain = sampled_grain(binary)
            if grain is not None:
                grains.append(grain)
            if frame.frame_index == 0:
                codes = (binary.bits * 255).astype(np.uint8)
                write_pgm(codes, seed_dir / f"speckle_{method.label}.pgm", maxval=255)

    def mean(values):
        return float(np.mean(values)) if values else None

    k = run.count
    reports = [MetricsReport(method='raw', seed=seed, count=k, grain_fwhm_px=mean(raw_grain))]
    for method in methods:
        fills, grains = totals[method.label]
        reports.append(MetricsReport(method=method.label, seed=seed, count=k,
                                     fill_fraction=mean(fills), grain_fwhm_px=mean(grains)))
    for report in reports:
        logger.info(f"Seed {seed} {report.method}: grain {report.grain_fwhm_px} px, "
                    f"fill {report.fill_fraction}")
    return reports


def speckle_stats(config: ExperimentConfig) -> List[MetricsReport]:
    """
    Speckle-grain comparison of raw, mean, Otsu and point-by-point frames.

    Writes ``seed_<s>/speckle_<method>.pgm`` for the first frame of each seed
    and ``speckle_stats.csv``.
    """
    results = _for_each_seed(config, lambda seed, _ex: speckle_stats_seed(config, seed))
    reports = [report for seed_reports in results for report in seed_reports]
    write_metrics_csv(reports, Path(config.output_dir) / 'speckle_stats.csv')
    return reports
