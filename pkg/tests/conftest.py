import numpy as np
import pytest
from hypothesis import strategies as st

from tsmc.channel import ChannelModel

BASE_1D = ChannelModel(dimension=1, D=2.2e-9, receiver_distance=2.15e-7)
BASE_3D = ChannelModel(dimension=3, D=2.2e-9, receiver_distance=2.15e-7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def decreasing_taps(min_len=2, max_len=21):
    """Strictly decreasing positive tap vectors."""
    return (st.lists(st.floats(0.01, 1.0), min_size=min_len, max_size=max_len, unique=True)
            .map(lambda v: np.sort(np.asarray(v))[::-1].copy()))


def random_taps(rng, L):
    while True:
        p = np.sort(rng.uniform(0.01, 1.0, L + 1))[::-1]
        if np.all(np.diff(p) < 0):
            return p


ACCEPTANCE: dict[int, str] = {}


def report(number: int, ok: bool, detail: str) -> bool:
    """Record and print one acceptance line; returns ``ok`` for the caller to assert."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
