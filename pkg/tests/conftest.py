import numpy as np
import pytest
from hypothesis import settings, strategies as st

from thermospec.potentials import LocallyConstant
from thermospec.shift import ShiftSpace, enumerate_words, full_shift, golden_mean_shift

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def full2():
    return full_shift(2)


@pytest.fixture
def golden():
    return golden_mean_shift()


@st.composite
def sfts(draw, max_symbols=3):
    """Transitive SFTs on 2..max_symbols symbols."""
    d = draw(st.integers(2, max_symbols))
    while True:
        bits = draw(st.lists(st.booleans(), min_size=d * d, max_size=d * d))
        A = np.array(bits).reshape(d, d)
        try:
            return ShiftSpace.from_matrix(A)
        except ValueError:
            # reject non-transitive draws by forcing a cycle through every symbol
            A[np.arange(d), (np.arange(d) + 1) % d] = True
            return ShiftSpace.from_matrix(A)


@st.composite
def tables(draw, space, r=1, scale=2.0):
    words = enumerate_words(space, r)
    vals = draw(st.lists(st.floats(-scale, scale, allow_nan=False), min_size=len(words), max_size=len(words)))
    return LocallyConstant(space, r, dict(zip(words, vals)), "drawn")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
