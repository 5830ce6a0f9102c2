import functools
import time

import numpy as np
import pytest

from camregge import synth
from camregge.cli import Session
from camregge.config import RunConfig

ACCEPTANCE_LINES: list[str] = []


def record(tag: str, ok, detail: str) -> None:
    verdict = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE_LINES.append(f"{tag:4s} {verdict}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def preset_session(name: str, m_max: int = 2):
    """Model, table, ledger and a pipeline session for a preset."""
    model = synth.PRESETS[name]()
    table, ledger = synth.generate(model)
    s = Session(table, RunConfig(m_max=m_max))
    return model, table, ledger, s


@functools.lru_cache(maxsize=None)
def preset_unfolded(name: str, m_max: int = 2):
    """Unfolded amplitudes of a preset and the seconds spent (continuation included)."""
    model, table, ledger, s = preset_session(name, m_max)
    t0 = time.perf_counter()
    u = s.unfolded
    return u, time.perf_counter() - t0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_table():
    model = synth.one_pole_model(energies=(62.09, 71.985, 81.88, 91.775, 101.67))
    return synth.generate(model)
