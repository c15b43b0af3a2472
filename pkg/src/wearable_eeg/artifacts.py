"""Amplitude and variance artifact detectors and their combined mask.

Masks are global across channels: a sample flagged on any channel is
invalid on every channel, so all power series share one valid-sample set.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MaskConfig:
    amplitude_threshold_uv: float = 200.0
    pre_flag_s: float = 0.5
    post_flag_s: float = 1.0
    variance_threshold_uv2: float = 2500.0
    variance_window_s: float = 1.0

    def __post_init__(self):
        if not self.amplitude_threshold_uv > 0 or not self.variance_threshold_uv2 > 0:
            raise ValueError("artifact thresholds must be strictly positive")
        if self.pre_flag_s < 0 or self.post_flag_s < 0:
            raise ValueError("pre/post flag durations must be nonnegative")
        if not self.variance_window_s > 0:
            raise ValueError("variance_window_s must be strictly positive")


@dataclass(frozen=True, eq=False)
class ArtifactMask:
    """Per-sample artifact flags; ``True`` marks an invalid sample."""

    flags: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool)
        if flags.ndim != 1:
            raise ValueError("mask flags must be one-dimensional")
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)

    def __len__(self):
        return self.flags.size

    def __eq__(self, other):
        if not isinstance(other, ArtifactMask):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.flags, other.flags))

    @property
    def valid_fraction(self):
        if self.flags.size == 0:
            return 1.0
        return 1.0 - np.count_nonzero(self.flags) / self.flags.size

    def runs(self):
        """Flagged runs as ``(start, end)`` sample indices, both inclusive."""
        padded = np.concatenate([[False], self.flags, [False]]).astype(np.int8)
        edges = np.flatnonzero(np.diff(padded))
        return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]

    @classmethod
    def empty(cls, n_samples, sample_rate_hz):
        return cls(np.zeros(n_samples, dtype=bool), sample_rate_hz)


def amplitude_flags(rec, cfg=MaskConfig()):
    """Flag ``[i - pre, i + post]`` around every suprathreshold sample.

    Exceedance is ``|x| > amplitude_threshold_uv`` on any channel. The
    interval is clamped to the recording and includes both endpoints.
    """
    fs = rec.sample_rate_hz
    n = rec.n_samples
    hits = np.flatnonzero(np.any(np.abs(rec.samples) > cfg.amplitude_threshold_uv, axis=0))
    pre = int(round(cfg.pre_flag_s * fs))
    post = int(round(cfg.post_flag_s * fs))
    edges = np.zeros(n + 1, dtype=np.int64)
    np.add.at(edges, np.maximum(hits - pre, 0), 1)
    np.add.at(edges, np.minimum(hits + post, n - 1) + 1, -1)
    return ArtifactMask(np.cumsum(edges[:-1]) > 0, fs)


def variance_flags(rec, cfg=MaskConfig()):
    """Flag every consecutive window whose population variance is too high.

    Windows do not overlap; a trailing partial window is screened too.
    """
    fs = rec.sample_rate_hz
    n = rec.n_samples
    w = max(1, int(round(cfg.variance_window_s * fs)))
    flags = np.zeros(n, dtype=bool)
    for start in range(0, n, w):
        seg = rec.samples[:, start:start + w]
        if np.any(seg.var(axis=1) > cfg.variance_threshold_uv2):
            flags[start:start + w] = True
    return ArtifactMask(flags, fs)


def combine(masks):
    """Pointwise union of masks with equal length and rate."""
    masks = list(masks)
    if not masks:
        raise ValueError("combine needs at least one mask")
    first = masks[0]
    for m in masks[1:]:
        if len(m) != len(first):
            raise ValueError(f"mask length mismatch: {len(m)} vs {len(first)}")
        if m.sample_rate_hz != first.sample_rate_hz:
            raise ValueError("mask sample rate mismatch")
    flags = np.logical_or.reduce([m.flags for m in masks])
    return ArtifactMask(flags, first.sample_rate_hz)


def compute_mask(rec, cfg=MaskConfig()):
    return combine([amplitude_flags(rec, cfg), variance_flags(rec, cfg)])
