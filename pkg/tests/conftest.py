import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from sentipipe import numerics as nx
from sentipipe.corpus import RawComment

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _float64():
    nx.set_default_dtype(np.float64)
    yield
    nx.set_default_dtype(np.float64)


@pytest.fixture
def fixtures():
    return FIXTURES


def raw(text, id="c1", lang_hint=None):
    return RawComment(id, "v1", "someone", datetime(2025, 1, 5, tzinfo=timezone.utc), 0, lang_hint, text)


@pytest.fixture(scope="session")
def bundled_run(tmp_path_factory):
    """`sentipipe all` on the bundled corpus with default settings, run once per session."""
    from dataclasses import replace

    from sentipipe import cli
    from sentipipe.config import RunConfig

    out = tmp_path_factory.mktemp("bundled")
    cli.execute(replace(RunConfig(), out_dir=str(out)), "all")
    return out


# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, desc = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k}: {desc}")
