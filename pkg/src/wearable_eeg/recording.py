"""Recording data model and the synthetic recording generator."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError
from .wavelet import BAND_NAMES, N_BANDS, band_center_hz

DEFAULT_SAMPLE_RATE_HZ = 220.0
ARTIFACT_SPIKE_UV = 500.0
ENVELOPE_FREQ_RANGE_HZ = (0.1, 0.5)


class ClassLabel(str, Enum):
    INSTRUCTIONAL = "Instructional"
    RECREATIONAL = "Recreational"

    @property
    def sign(self):
        """+1 for the recreational (positive) class, -1 otherwise."""
        return 1 if self is ClassLabel.RECREATIONAL else -1

    @classmethod
    def from_sign(cls, value):
        return cls.RECREATIONAL if value > 0 else cls.INSTRUCTIONAL


@dataclass(frozen=True)
class ChannelLayout:
    channel_names: tuple = ("T9", "FP1", "FP2", "T10")
    hemispheric_pairs: tuple = (("FP1", "FP2"), ("T9", "T10"))

    def __post_init__(self):
        names = tuple(str(n) for n in self.channel_names)
        pairs = tuple((str(a), str(b)) for a, b in self.hemispheric_pairs)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "hemispheric_pairs", pairs)
        if not names or any(not n for n in names):
            raise ValueError("channel names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate channel names in {names}")
        for a, b in pairs:
            for label in (a, b):
                if label not in names:
                    raise ValueError(f"hemispheric pair label {label!r} is not a channel")

    @property
    def n_channels(self):
        return len(self.channel_names)

    def index(self, name):
        return self.channel_names.index(name)


DEFAULT_LAYOUT = ChannelLayout()


@dataclass(frozen=True, eq=False)
class EegRecording:
    """Multi-channel EEG in microvolts, shape ``(n_channels, n_samples)``."""

    subject_id: str
    session_id: str
    class_label: ClassLabel
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    channel_names: tuple = DEFAULT_LAYOUT.channel_names

    def __post_init__(self):
        x = np.array(self.samples, dtype=float)
        if x.ndim != 2:
            raise DataError("samples must be a 2-D array (channels x samples)")
        if x.shape[1] < 1:
            raise DataError("recording must contain at least one sample")
        if x.shape[0] != len(self.channel_names):
            raise DataError(f"{x.shape[0]} channels given for layout {self.channel_names}")
        if not np.all(np.isfinite(x)):
            ch, i = np.argwhere(~np.isfinite(x))[0]
            raise DataError(f"non-finite amplitude at sample {i} of channel "
                            f"{self.channel_names[ch]}")
        if not self.sample_rate_hz > 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate_hz}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "class_label", ClassLabel(self.class_label))
        object.__setattr__(self, "subject_id", str(self.subject_id))
        object.__setattr__(self, "session_id", str(self.session_id))
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_samples(self):
        return self.samples.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz

    @property
    def key(self):
        """Identifier unique within a dataset: subject, session and class."""
        return (self.subject_id, self.session_id, self.class_label.value)

    @property
    def recording_id(self):
        return "/".join(self.key)

    def with_samples(self, samples):
        return EegRecording(self.subject_id, self.session_id, self.class_label, samples,
                            self.sample_rate_hz, self.channel_names)


@dataclass(frozen=True)
class Coupling:
    """Shared slow envelope between two (electrode, level) power series."""

    series_a: tuple
    series_b: tuple
    strength: float

    def __post_init__(self):
        object.__setattr__(self, "series_a", _series_key(self.series_a))
        object.__setattr__(self, "series_b", _series_key(self.series_b))
        if not 0.0 <= self.strength <= 1.0:
            raise ConfigError(f"coupling strength must lie in [0, 1], got {self.strength}")
        if self.series_a == self.series_b:
            raise ConfigError("a series cannot be coupled to itself")


def _level_of(band):
    if isinstance(band, str) and not band.isdigit():
        if band not in BAND_NAMES:
            raise ConfigError(f"unknown band {band!r}; expected one of {BAND_NAMES}")
        return BAND_NAMES.index(band) + 1
    level = int(band)
    if not 1 <= level <= N_BANDS:
        raise ConfigError(f"band level must be in 1..{N_BANDS}, got {band!r}")
    return level


def _series_key(series):
    electrode, band = series
    return (str(electrode), _level_of(band))


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic recording.

    ``band_power_profile`` maps electrode -> {band name or level: amplitude in
    uV}. Each series' oscillation sits at the nominal center of its band and
    is scaled by ``sqrt(q(t))``, where ``q`` is a slow raised-cosine power
    envelope in [0, 1] with ``q(0) = 1``. A coupling of strength ``c`` mixes a
    shared envelope into both series' ``q`` with weight ``c``; mixing ``q``
    (rather than the amplitude) keeps each series' mean power independent of
    ``c``, so couplings move correlations without moving average power.
    """

    duration_s: float
    class_label: ClassLabel = ClassLabel.INSTRUCTIONAL
    band_power_profile: dict = field(default_factory=dict)
    coupling_profile: tuple = ()
    artifact_rate_per_min: float = 0.0
    noise_amplitude_uv: float = 0.0
    seed: int = 0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    subject_id: str = "S01"
    session_id: str = "1"

    def __post_init__(self):
        object.__setattr__(self, "class_label", ClassLabel(self.class_label))
        couplings = tuple(c if isinstance(c, Coupling) else Coupling(*c)
                          for c in self.coupling_profile)
        object.__setattr__(self, "coupling_profile", couplings)
        if not self.duration_s > 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be positive")
        if self.artifact_rate_per_min < 0 or self.noise_amplitude_uv < 0:
            raise ConfigError("artifact rate and noise amplitude must be nonnegative")
        for electrode, bands in self.band_power_profile.items():
            for band, amp in bands.items():
                _level_of(band)
                if amp < 0:
                    raise ConfigError(f"negative amplitude for {electrode}/{band}")

    def amplitudes(self, layout=DEFAULT_LAYOUT):
        """Amplitude matrix, shape ``(n_channels, 7)``."""
        amps = np.zeros((layout.n_channels, N_BANDS))
        for electrode, bands in self.band_power_profile.items():
            if electrode not in layout.channel_names:
                raise ConfigError(f"profile electrode {electrode!r} not in layout")
            for band, amp in bands.items():
                amps[layout.index(electrode), _level_of(band) - 1] = float(amp)
        return amps


def raised_cosine(freq_hz, t):
    return 0.5 * (1.0 + np.cos(2.0 * np.pi * freq_hz * t))


def generate_synthetic(spec, layout=DEFAULT_LAYOUT):
    """Deterministic synthetic recording for ``spec``.

    Random draws happen in a fixed order regardless of which amplitudes are
    zero, so changing one band's amplitude never reshuffles the others.
    """
    fs = spec.sample_rate_hz
    n = int(round(spec.duration_s * fs))
    if n < 1:
        raise ConfigError("duration is shorter than one sample")
    amps = spec.amplitudes(layout)
    nyquist = fs / 2.0
    for level in range(1, N_BANDS + 1):
        center = band_center_hz(level, fs)
        if np.any(amps[:, level - 1] > 0) and center >= nyquist:
            raise ConfigError(f"band {BAND_NAMES[level - 1]} centre {center:g} Hz is at or "
                              f"above the Nyquist frequency {nyquist:g} Hz")
    n_ch = layout.n_channels
    weights = np.zeros((n_ch, N_BANDS))
    for c in spec.coupling_profile:
        for electrode, level in (c.series_a, c.series_b):
            if electrode not in layout.channel_names:
                raise ConfigError(f"coupled electrode {electrode!r} not in layout")
            weights[layout.index(electrode), level - 1] += c.strength
    if np.any(weights > 1.0 + 1e-12):
        raise ConfigError("total coupling strength of a series exceeds 1")

    rng = np.random.default_rng(spec.seed)
    lo, hi = ENVELOPE_FREQ_RANGE_HZ
    own_freqs = rng.uniform(lo, hi, size=(n_ch, N_BANDS))
    shared_freqs = rng.uniform(lo, hi, size=len(spec.coupling_profile))
    noise = rng.standard_normal((n_ch, n))

    t = np.arange(n) / fs
    x = np.zeros((n_ch, n))
    shared = [raised_cosine(f, t) for f in shared_freqs]
    for ch in range(n_ch):
        for b in range(N_BANDS):
            if amps[ch, b] == 0.0:
                continue
            q = (1.0 - weights[ch, b]) * raised_cosine(own_freqs[ch, b], t)
            key = (layout.channel_names[ch], b + 1)
            for c, env in zip(spec.coupling_profile, shared):
                if key in (c.series_a, c.series_b):
                    q = q + c.strength * env
            carrier = np.cos(2.0 * np.pi * band_center_hz(b + 1, fs) * t)
            x[ch] += amps[ch, b] * np.sqrt(np.clip(q, 0.0, 1.0)) * carrier
    x += spec.noise_amplitude_uv * noise

    for idx, ch, sign in _artifact_events(rng, spec.artifact_rate_per_min, n, fs, n_ch):
        x[ch, idx] += sign * ARTIFACT_SPIKE_UV

    return EegRecording(spec.subject_id, spec.session_id, spec.class_label, x, fs,
                        layout.channel_names)


def _artifact_events(rng, rate_per_min, n, fs, n_ch):
    if rate_per_min <= 0:
        return []
    rate_hz = rate_per_min / 60.0
    duration = n / fs
    events = []
    t = rng.exponential(1.0 / rate_hz)
    while t < duration:
        idx = min(int(round(t * fs)), n - 1)
        ch = int(rng.integers(n_ch))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        events.append((idx, ch, sign))
        t += rng.exponential(1.0 / rate_hz)
    return events


def recording_seed(base_seed, *indices):
    """Derive an independent 32-bit seed from a base seed and index path."""
    return int(np.random.SeedSequence([int(base_seed), *map(int, indices)]).generate_state(1)[0])


def synthesize_dataset(class_profiles, n_subjects, sessions=("1", "2"), duration_s=420.0,
                       noise_amplitude_uv=2.0, artifact_rate_per_min=0.0, seed=0,
                       layout=DEFAULT_LAYOUT, sample_rate_hz=DEFAULT_SAMPLE_RATE_HZ):
    """Subjects x sessions x classes synthetic recordings.

    ``class_profiles`` maps a class label to a dict with keys
    ``band_power_profile`` and optionally ``coupling_profile``. Subject ids
    are ``S01``, ``S02``, ...; each recording gets a seed derived from
    ``seed`` and its (subject, session, class) position.
    """
    width = max(2, len(str(n_subjects)))
    recordings = []
    for si in range(n_subjects):
        subject = f"S{si + 1:0{width}d}"
        for sj, session in enumerate(sessions):
            for ci, label in enumerate(sorted(ClassLabel(k) for k in class_profiles)):
                profile = class_profiles[label] if label in class_profiles \
                    else class_profiles[label.value]
                spec = SyntheticSpec(
                    duration_s=duration_s,
                    class_label=label,
                    band_power_profile=profile.get("band_power_profile", {}),
                    coupling_profile=tuple(profile.get("coupling_profile", ())),
                    artifact_rate_per_min=artifact_rate_per_min,
                    noise_amplitude_uv=noise_amplitude_uv,
                    seed=recording_seed(seed, si, sj, ci),
                    sample_rate_hz=sample_rate_hz,
                    subject_id=subject,
                    session_id=str(session),
                )
                recordings.append(generate_synthetic(spec, layout))
    return recordings

