#!/usr/bin/env python3
"""
Script to clear the screening history
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import load_settings
from src.database import clear_screening_history, get_screening_history, init_database


def clear_history(database_url, force=False):
    """Delete all recorded screening runs, asking first unless forced"""
    init_database(database_url)

    if not force:
        total = len(get_screening_history(limit=100_000))
        if total == 0:
            print("History is already empty")
            return
        print(f"{total} screening runs recorded")
        confirm = input("Delete all of them? (y/N): ").strip().lower()
        if confirm not in ["y", "yes"]:
            print("Cancelled")
            return

    deleted = clear_screening_history()
    print(f"Removed {deleted} records")


if __name__ == "__main__":
    args = [arg for arg in sys.argv[1:] if arg != "--force"]
    url = args[0] if args else load_settings().history_db
    if not url:
        print("Usage: clear_history.py [--force] <database-url> (or set HTD_HISTORY_DB)")
        sys.exit(2)
    clear_history(url, force="--force" in sys.argv[1:])
