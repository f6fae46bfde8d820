import numpy as np
import pytest

from cobmdsp.bmdsp.pipeline import FrameSpec
from cobmdsp.preambles import build_frame, random_payload, shape_frame
from cobmdsp.sigcore import DspParams


@pytest.fixture(scope="session")
def params():
    return DspParams()


@pytest.fixture(scope="session")
def frame_spec():
    return FrameSpec()


@pytest.fixture(scope="session")
def tx(params, frame_spec):
    """One random frame and its shaped waveform."""
    bits = random_payload(frame_spec.layout, np.random.default_rng(7))
    fr = build_frame(bits, pre_b=frame_spec.pre_b, pilots=frame_spec.pilots, layout=frame_spec.layout)
    return fr, shape_frame(fr, params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])
