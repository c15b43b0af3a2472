import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from wearable_eeg.recording import DEFAULT_LAYOUT, EegRecording  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def make_recording():
    def _make(samples, fs=220.0, subject="S01", session="1", label="Instructional"):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = np.tile(samples, (DEFAULT_LAYOUT.n_channels, 1))
        return EegRecording(subject, session, label, samples, fs, DEFAULT_LAYOUT.channel_names)
    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
