"""
Pytest configuration and shared fixtures
"""

import os
import shutil
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add the parent directory to the path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.delay import write_delay_log  # noqa: E402
from src.docio import load_document, skeleton_document  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
RUNNERS = Path(__file__).resolve().parent / "runners"

# Delay log with the published shape: 100 000 samples over [12.18, 13.20] ms
DELAY_LO = 12.18
DELAY_HI = 13.20
DELAY_BINS = 100
DELAY_TOTAL = 100_000
DELAY_MODE_BIN = 41
DELAY_MODE_COUNT = 6460


def paper_shaped_delays() -> np.ndarray:
    """One sample at the minimum, three in the last bin, 6 460 in the mode bin"""
    width = (DELAY_HI - DELAY_LO) / DELAY_BINS

    def center(i):
        return DELAY_LO + (i + 0.5) * width

    counts = {0: 1, DELAY_BINS - 1: 3, DELAY_MODE_BIN: DELAY_MODE_COUNT}
    others = [i for i in range(DELAY_BINS) if i not in counts]
    remaining = DELAY_TOTAL - sum(counts.values())
    share, extra = divmod(remaining, len(others))
    for position, i in enumerate(others):
        counts[i] = share + (1 if position < extra else 0)

    values = [DELAY_LO, DELAY_HI, center(DELAY_BINS - 1), center(DELAY_BINS - 1)]
    for i, count in counts.items():
        if i in (0, DELAY_BINS - 1):
            continue
        values.extend([center(i)] * count)
    rng = np.random.default_rng(2024)
    return rng.permutation(np.asarray(values, dtype=float))


@pytest.fixture(autouse=True)
def mock_environment():
    """Pin the toolkit's environment variables for all tests"""
    with patch.dict(
        os.environ,
        {
            "HTD_LOG_LEVEL": "WARNING",
            "HTD_NORMAL_K": "4.0",
            "HTD_RUNNER_TIMEOUT": "30",
            "HTD_HISTORY_DB": "",
            "HTD_DEFAULT_BINS": "100",
        },
    ):
        yield


@pytest.fixture
def gdrts_path(tmp_path):
    """Writable copy of the GDRTS fixture"""
    path = tmp_path / "gdrts.htd.yaml"
    shutil.copy(FIXTURES / "gdrts.htd.yaml", path)
    return path


@pytest.fixture
def menb_path(tmp_path):
    """Writable copy of the MENB fixture"""
    path = tmp_path / "menb.htd.yaml"
    shutil.copy(FIXTURES / "menb.htd.yaml", path)
    return path


@pytest.fixture
def gdrts_doc():
    return load_document(FIXTURES / "gdrts.htd.yaml")


@pytest.fixture
def menb_doc():
    return load_document(FIXTURES / "menb.htd.yaml")


@pytest.fixture
def skeleton_doc():
    return skeleton_document()


@pytest.fixture
def delay_values():
    return paper_shaped_delays()


@pytest.fixture
def delay_log(tmp_path, delay_values):
    """Single-column delay log with a header line"""
    path = tmp_path / "delays.csv"
    write_delay_log(delay_values, path)
    return path


@pytest.fixture
def gdrts_runner_command():
    return [sys.executable, str(RUNNERS / "gdrts_model.py")]


@pytest.fixture
def scripted_runner():
    """Factory for the misbehaving runner command in a given mode"""

    def command(mode: str = "ok") -> list[str]:
        return [sys.executable, str(RUNNERS / "scripted_model.py"), mode]

    return command
