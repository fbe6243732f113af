#!/usr/bin/env python3
"""Run every bundled scenario and emit its plot data."""

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from afc_memory.harness import BUNDLED_CONFIGS, bundled_config, emit_plotdata, run_scenario

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def reproduce(name: str, output_root: Path, trials: int = None) -> dict:
    """Run one bundled scenario into output_root/name and write its plots."""
    config = bundled_config(name)
    if trials:
        config.trials.n_trials = trials
    manifest = run_scenario(config, output_root / name)
    emit_plotdata(manifest)
    return manifest.summary


def main():
    parser = argparse.ArgumentParser(description='Reproduce every bundled scenario')
    parser.add_argument('--output', type=Path, default=Path('runs'), help='Output root (default: runs)')
    parser.add_argument('--only', nargs='*', choices=BUNDLED_CONFIGS, help='Subset of bundled configs')
    parser.add_argument('--trials', type=int, help='Override n_trials for the Monte Carlo scenarios')
    parser.add_argument('--max-workers', type=int, default=3, help='Scenarios run concurrently')

    args = parser.parse_args()
    names = args.only or list(BUNDLED_CONFIGS)

    start = time.time()
    failed = []
    with ThreadPoolExecutor(max_workers=args.max_workers) as executor:
        futures = {executor.submit(reproduce, name, args.output, args.trials): name for name in names}
        for future in as_completed(futures):
            name = futures[future]
            try:
                summary = future.result()
                logger.info(f"✓ {name}: {summary}")
            except Exception as e:
                logger.error(f"✗ {name}: {e}")
                failed.append(name)

    logger.info(f"Finished {len(names) - len(failed)}/{len(names)} scenarios in {time.time() - start:.1f}s")
    if failed:
        logger.error(f"Failed: {', '.join(sorted(failed))}")
        sys.exit(1)


if __name__ == '__main__':
    main()
