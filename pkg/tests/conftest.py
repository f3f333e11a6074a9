import contextlib
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_CRITERIA: dict = {}


class _Record:
    detail = ""


@contextlib.contextmanager
def _criterion(number: int, title: str):
    rec = _Record()
    try:
        yield rec
    except BaseException:
        _CRITERIA[number] = (title, False, rec.detail)
        print(f"criterion {number:2d} FAIL  {title}  {rec.detail}")
        raise
    _CRITERIA[number] = (title, True, rec.detail)
    print(f"criterion {number:2d} PASS  {title}  {rec.detail}")


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}")


# ------------------------------------------------------------- strategies

coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False, width=64)


@st.composite
def measures(draw, max_atoms=4, dim=None, min_atoms=1):
    from wdrdg import DiscreteMeasure

    d = dim if dim is not None else draw(st.integers(1, 3))
    n = draw(st.integers(min_atoms, max_atoms))
    pts = draw(arrays(np.float64, (n, d), elements=coords))
    raw = draw(arrays(np.float64, n, elements=st.floats(0.05, 1.0)))
    return DiscreteMeasure(pts, raw / raw.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
