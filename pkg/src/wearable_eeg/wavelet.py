"""Daubechies-4 multilevel DWT with periodic boundaries and band bookkeeping.

The transform is an orthonormal filter bank: each level splits the current
approximation into a half-length approximation and detail using the 8-tap
db4 filters, wrapping around the signal ends. Odd-length levels get a single
zero sample appended inside the transform, which keeps the map an isometry
(Parseval holds exactly) and makes detail ``k`` exactly ``ceil(N / 2**k)``
long.

Seven series come out of a 6-level decomposition. They are indexed 1..7:
levels 1-6 are the detail series, level 7 is the level-6 approximation.
"""

from dataclasses import dataclass
from math import ceil
from typing import NamedTuple

import numpy as np

DEFAULT_LEVELS = 6
N_BANDS = DEFAULT_LEVELS + 1

# Daubechies scaling filter with 4 vanishing moments.
DB4_LOWPASS = np.array([
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
])

BAND_NAMES = ("HH-Gamma", "H-Gamma", "L-Gamma", "Beta", "Alpha", "Theta", "Delta")


@dataclass(frozen=True)
class WaveletFilter:
    lowpass: np.ndarray
    highpass: np.ndarray

    @classmethod
    def db4(cls):
        lo = DB4_LOWPASS.copy()
        return cls(lo, quadrature_mirror(lo))

    def check(self, atol=1e-12):
        """Raise ``ValueError`` unless the pair is an orthonormal QMF pair."""
        lo, hi = self.lowpass, self.highpass
        if abs(lo.sum() - np.sqrt(2.0)) > atol:
            raise ValueError(f"lowpass taps sum to {lo.sum()!r}, expected sqrt(2)")
        if abs(np.dot(lo, lo) - 1.0) > atol:
            raise ValueError("lowpass taps are not unit norm")
        if not np.allclose(hi, quadrature_mirror(lo), rtol=0, atol=atol):
            raise ValueError("highpass is not the quadrature mirror of lowpass")


def quadrature_mirror(lowpass):
    lowpass = np.asarray(lowpass, dtype=float)
    k = np.arange(lowpass.size)
    return (-1.0) ** k * lowpass[::-1]


_DB4 = WaveletFilter.db4()


class Band(NamedTuple):
    low_hz: float
    high_hz: float
    name: str


def band_for_level(level, sample_rate_hz=220.0):
    """Nominal frequency range and classic name of a decomposition level.

    At 220 Hz this gives the conventional level/band table row for row;
    other rates scale the ranges proportionally and keep the names by level.

    Note that these nominal ranges sit one octave above what a 6-level DWT
    physically resolves (see :func:`physical_band_for_level`).
    """
    _check_level(level)
    fs = float(sample_rate_hz)
    if fs <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if level <= DEFAULT_LEVELS:
        return Band(fs / 2 ** level, fs / 2 ** (level - 1), BAND_NAMES[level - 1])
    return Band(0.0, fs / 2 ** DEFAULT_LEVELS, BAND_NAMES[level - 1])


def physical_band_for_level(level, sample_rate_hz=220.0):
    """Passband actually covered by a level of the 6-level transform.

    Detail ``k`` spans ``[fs / 2**(k+1), fs / 2**k]`` and the approximation
    spans ``[0, fs / 2**7]``.
    """
    _check_level(level)
    fs = float(sample_rate_hz)
    if level <= DEFAULT_LEVELS:
        return Band(fs / 2 ** (level + 1), fs / 2 ** level, BAND_NAMES[level - 1])
    return Band(0.0, fs / 2 ** (DEFAULT_LEVELS + 1), BAND_NAMES[level - 1])


def band_center_hz(level, sample_rate_hz=220.0):
    band = band_for_level(level, sample_rate_hz)
    return 0.5 * (band.low_hz + band.high_hz)


def _check_level(level):
    if not isinstance(level, (int, np.integer)) or not 1 <= level <= N_BANDS:
        raise ValueError(f"level must be an integer in 1..{N_BANDS}, got {level!r}")


def _analysis_step(x, filt):
    # x: (..., n); returns approximation and detail of length ceil(n / 2)
    n = x.shape[-1]
    if n % 2:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        n += 1
    m = n // 2
    idx = (2 * np.arange(m)[:, None] + np.arange(filt.lowpass.size)[None, :]) % n
    frames = x[..., idx]
    return frames @ filt.lowpass, frames @ filt.highpass


def _synthesis_step(approx, detail, out_len, filt):
    m = approx.shape[-1]
    n = 2 * m
    taps = filt.lowpass.size
    idx = ((2 * np.arange(m)[:, None] + np.arange(taps)[None, :]) % n).ravel()
    contrib = (approx[..., :, None] * filt.lowpass + detail[..., :, None] * filt.highpass)
    contrib = contrib.reshape(contrib.shape[:-2] + (m * taps,))
    if contrib.ndim == 1:
        out = np.bincount(idx, weights=contrib, minlength=n)
    else:
        flat = contrib.reshape(-1, m * taps)
        out = np.stack([np.bincount(idx, weights=row, minlength=n) for row in flat])
        out = out.reshape(contrib.shape[:-1] + (n,))
    return out[..., :out_len]


def dwt_multilevel(signal, levels=DEFAULT_LEVELS, wavelet=None):
    """Multilevel periodic DWT.

    Parameters
    ----------
    signal : array_like, shape (..., N)
        Real samples; leading axes are transformed independently.
    levels : int
        Decomposition depth; ``N >= 2**levels`` is required.

    Returns
    -------
    list of ndarray
        ``[d1, ..., d_levels, a_levels]``. Detail ``k`` has length
        ``ceil(N / 2**k)``; the approximation matches the deepest detail.
    """
    filt = wavelet or _DB4
    x = np.asarray(signal, dtype=float)
    if x.ndim == 0:
        raise ValueError("signal must be at least one-dimensional")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    n = x.shape[-1]
    if n < 2 ** levels:
        raise ValueError(f"signal of length {n} is too short for a {levels}-level DWT "
                         f"(needs >= {2 ** levels} samples)")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite values")
    coeffs = []
    approx = x
    for _ in range(levels):
        approx, detail = _analysis_step(approx, filt)
        coeffs.append(detail)
    coeffs.append(approx)
    return coeffs


def inverse_dwt(coeffs, length=None, wavelet=None):
    """Invert :func:`dwt_multilevel`.

    ``length`` is the original sample count. It defaults to twice the first
    detail length, which is exact for even-length signals; odd-length
    originals need it passed explicitly.
    """
    filt = wavelet or _DB4
    coeffs = [np.asarray(c, dtype=float) for c in coeffs]
    if len(coeffs) < 2:
        raise ValueError("need at least one detail series and the approximation")
    details, approx = coeffs[:-1], coeffs[-1]
    for k in range(1, len(details)):
        if details[k].shape[-1] != ceil(details[k - 1].shape[-1] / 2):
            raise ValueError(f"detail level {k + 1} has length {details[k].shape[-1]}, "
                             f"expected {ceil(details[k - 1].shape[-1] / 2)}")
    if approx.shape[-1] != details[-1].shape[-1]:
        raise ValueError("approximation length must match the deepest detail length")
    n1 = details[0].shape[-1]
    if length is None:
        length = 2 * n1
    if ceil(length / 2) != n1:
        raise ValueError(f"length {length} is inconsistent with a first detail of {n1}")
    for k in range(len(details) - 1, -1, -1):
        out_len = length if k == 0 else details[k - 1].shape[-1]
        approx = _synthesis_step(approx, details[k], out_len, filt)
    return approx


def expansion_factor(level, levels=DEFAULT_LEVELS):
    return 2 ** min(level, levels)


def expand_coefficients(coeffs, level, target_len, levels=DEFAULT_LEVELS):
    """Repeat each coefficient ``2**level`` times and truncate to ``target_len``.

    Output sample ``i`` carries coefficient ``i // 2**level``, so sample
    indices of the recording index the expanded series directly. The
    approximation (``level == levels + 1``) uses the deepest detail's factor.
    """
    c = np.asarray(coeffs, dtype=float)
    factor = expansion_factor(level, levels)
    expected = ceil(target_len / factor)
    if c.shape[-1] != expected:
        raise ValueError(f"level {level} expects {expected} coefficients for "
                         f"{target_len} samples, got {c.shape[-1]}")
    return np.repeat(c, factor, axis=-1)[..., :target_len]


@dataclass(frozen=True)
class BandDecomposition:
    """Expanded coefficient series, shape ``(n_channels, 7, N)``."""

    series: np.ndarray
    channel_names: tuple
    sample_rate_hz: float

    @property
    def n_samples(self):
        return self.series.shape[-1]

    def level_band_map(self):
        return {level: band_for_level(level, self.sample_rate_hz)
                for level in range(1, N_BANDS + 1)}


def decompose_recording(rec, wavelet=None):
    """Per-channel 6-level DWT, expanded onto the recording's time base."""
    x = np.asarray(rec.samples, dtype=float)
    n = x.shape[-1]
    coeffs = dwt_multilevel(x, DEFAULT_LEVELS, wavelet)
    series = np.stack([expand_coefficients(c, level, n)
                       for level, c in enumerate(coeffs, start=1)], axis=1)
    series.setflags(write=False)
    return BandDecomposition(series, tuple(rec.channel_names), float(rec.sample_rate_hz))
