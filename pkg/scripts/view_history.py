#!/usr/bin/env python3
"""
Script to view the screening history
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import load_settings
from src.database import get_screening_history, init_database


def view_history(database_url, document_id=None):
    """Display every recorded screening run with its full ranking"""
    init_database(database_url)
    records = get_screening_history(limit=1000, document_id=document_id)

    if not records:
        print("No screening runs recorded")
        return

    print(f"{len(records)} screening runs in {database_url}:")
    print("=" * 80)

    for record in records:
        print(f"Document: {record['document_id']}  PoI: {record['poi_id']}")
        print(f"Metric: {record['metric']}  Rule: {record['rule']}")
        print(f"Runner: {record['runner']}")
        print(f"Runs: {record['runs_ok']} ok, {record['runs_failed']} failed")
        print(f"Recorded: {record['created_on']}")
        for entry in record["ranking"]["entries"]:
            print(f"  {entry['rank']:>3}  {entry['param']:<16} {entry['magnitude']:.6g}")
        print("-" * 80)


def count_runs(database_url):
    """Count recorded runs per document"""
    init_database(database_url)
    counts = {}
    for record in get_screening_history(limit=100_000):
        counts[record["document_id"]] = counts.get(record["document_id"], 0) + 1
    for document_id, count in sorted(counts.items()):
        print(f"{document_id}: {count} runs")


if __name__ == "__main__":
    url = sys.argv[1] if len(sys.argv) > 1 else load_settings().history_db
    if not url:
        print("Usage: view_history.py <database-url> (or set HTD_HISTORY_DB)")
        sys.exit(2)
    print("Screening history")
    print("=" * 40)
    count_runs(url)
    print()
    view_history(url)
