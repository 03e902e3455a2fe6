#!/usr/bin/env python
"""
Compares planner answers with oracle answers on seeded random trees.

Each tree gets one random query per query class; any difference between the tree engines
and the classical LP over all worlds is logged and makes the script exit with status 1.

Usage:
    uv run ./scripts/oracle_sweep.py [--trees N] [--max-n N] [--seed N] [--verbose]
"""

import argparse
import logging
import os
import sys
from pathlib import Path

## Django setup - must happen before importing app modules that read settings
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

## Add project root to path
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

import django  # noqa: E402

django.setup()

from prob_tree_app.lib.model_core import ProbTreeError  # noqa: E402
from prob_tree_app.lib.sweep_helpers import run_sweep  # noqa: E402

log = logging.getLogger(__name__)


def main() -> None:
    """
    Entry point for the sweep script.
    """
    parser = argparse.ArgumentParser(description='Compare planner answers with oracle answers on random trees')
    parser.add_argument(
        '--trees',
        type=int,
        default=200,
        help='Number of random trees (default: 200)',
    )
    parser.add_argument(
        '--max-n',
        type=int,
        default=8,
        help='Largest tree size (default: 8)',
    )
    parser.add_argument(
        '--seed',
        type=int,
        default=0,
        help='Random seed (default: 0)',
    )
    parser.add_argument(
        '--verbose',
        action='store_true',
        help='Enable debug logging',
    )
    args = parser.parse_args()

    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format='[%(asctime)s] %(levelname)s [%(module)s-%(funcName)s()::%(lineno)d] %(message)s',
        datefmt='%d/%b/%Y %H:%M:%S',
    )

    log.info(f'Starting oracle sweep, seed {args.seed}, {args.trees} trees, n <= {args.max_n}')
    try:
        report = run_sweep(args.seed, args.trees, args.max_n)
    except ProbTreeError:
        log.exception('Sweep aborted')
        sys.exit(1)
    for mismatch in report.mismatches:
        log.error(f'tree {mismatch.tree_index}: {mismatch.query} planner {mismatch.planner}, oracle {mismatch.oracle}')
    log.info(f'Finished: {report.summary()}')
    if not report.ok:
        sys.exit(1)


if __name__ == '__main__':
    main()
