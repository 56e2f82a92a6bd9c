#!/usr/bin/env python
"""
Script to run the method comparison over a range of grain sizes.
Each grain size gets its own output directory under the sweep root; the
per-run metrics are combined into one sweep CSV at the end.
"""

import argparse
import csv
import os
import sys
import subprocess
import logging
from datetime import datetime
from pathlib import Path

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler()]
)

logger = logging.getLogger(__name__)


def run_django_command(command, args=None, timeout=3600):
    """Run a Django management command."""
    try:
        cmd = [sys.executable, 'manage.py', command]
        if args:
            cmd.extend(args)
        
        logger.info(f"Running command: {' '.join(cmd)}")
        
        result = subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            timeout=timeout
        )
        
        if result.returncode == 0:
            logger.info(f"Command '{command}' completed successfully")
        else:
            logger.error(f"Command '{command}' failed with return code {result.returncode}")
            if result.stderr:
                logger.error(f"Error: {result.stderr.strip()}")
        
        return result.returncode == 0
        
    except subprocess.TimeoutExpired:
        logger.error(f"Command '{command}' timed out after {timeout} seconds")
        return False
    except OSError as e:
        logger.error(f"Error running command '{command}': {e}")
        return False


def combine_metrics(run_dirs, destination):
    """Concatenate each run's metrics.csv, prefixing a grain_sigma column."""
    rows = []
    for grain_sigma, run_dir in run_dirs:
        metrics = run_dir / 'metrics.csv'
        if not metrics.is_file():
            continue
        with open(metrics, newline='', encoding='utf-8') as f:
            for row in csv.DictReader(f):
                rows.append({'grain_sigma': grain_sigma, **row})
    if not rows:
        return 0
    with open(destination, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    return len(rows)


def main(argv=None):
    """Run the comparison once per grain size."""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--grain-sigmas', default='1.0,1.5,2.0,3.0')
    parser.add_argument('--out', default='runs/sweep')
    args, passthrough = parser.parse_known_args(argv)

    sweep_root = Path(args.out)
    sweep_root.mkdir(parents=True, exist_ok=True)
    sigmas = [s.strip() for s in args.grain_sigmas.split(',') if s.strip()]

    logger.info("=" * 60)
    logger.info("Starting grain-size sweep")
    logger.info(f"Timestamp: {datetime.now()}")
    logger.info("=" * 60)
    
    success_count = 0
    run_dirs = []
    for sigma in sigmas:
        run_dir = sweep_root / f"grain_{sigma}"
        run_dirs.append((sigma, run_dir))
        if run_django_command('compare', ['--grain-sigma', sigma, '--out', str(run_dir), *passthrough]):
            success_count += 1
    
    combined = combine_metrics(run_dirs, sweep_root / 'sweep.csv')

    # Summary
    logger.info("=" * 60)
    logger.info(f"Sweep completed: {success_count}/{len(sigmas)} runs successful, {combined} rows combined")
    
    if success_count == len(sigmas):
        logger.info("All runs completed successfully")
        return 0
    elif success_count > 0:
        logger.warning("Some runs failed - check logs for details")
        return 1
    else:
        logger.error("All runs failed")
        return 2


if __name__ == '__main__':
    # Change to the directory containing manage.py
    script_dir = os.path.dirname(os.path.abspath(__file__))
    project_dir = os.path.dirname(script_dir)
    os.chdir(project_dir)
    
    exit_code = main()
    sys.exit(exit_code)
