"""Rolling-window spectral and connectivity features over masked band power.

Column order is canonical and depends only on the channel layout:

1. ``avgpow/<elec>/<band>``  mean power, electrode-major then band level 1..7
2. ``varpow/<elec>/<band>``  population variance of power, same order
3. ``hemidiff/<L>-<R>/<band>``  mean power left minus right, pair-major
4. ``corr/<eA>.<bA>__<eB>.<bB>``  Pearson correlation of power series,
   upper triangle of the series-by-series matrix in row-major order

The default 4-electrode layout gives 28 + 28 + 14 + 378 = 448 columns.
"""

from dataclasses import dataclass, field

import numpy as np

from .artifacts import ArtifactMask
from .recording import DEFAULT_LAYOUT, ClassLabel
from .wavelet import BAND_NAMES, N_BANDS, decompose_recording

DEFAULT_WINDOW_SIZES_S = (5.0, 10.0, 30.0, 60.0, 120.0)
CATEGORIES = ("avgpow", "varpow", "hemidiff", "corr")
META_COLUMNS = ("subject", "session", "label", "window_start_s", "window_len_s")


def series_labels(layout=DEFAULT_LAYOUT):
    return [(e, b) for e in layout.channel_names for b in BAND_NAMES]


def feature_names(layout=DEFAULT_LAYOUT, hemispheric="per_pair"):
    """Canonical column names for ``layout``."""
    series = series_labels(layout)
    names = [f"avgpow/{e}/{b}" for e, b in series]
    names += [f"varpow/{e}/{b}" for e, b in series]
    if hemispheric == "per_pair":
        names += [f"hemidiff/{l}-{r}/{b}" for l, r in layout.hemispheric_pairs
                  for b in BAND_NAMES]
    elif hemispheric == "pooled":
        names += [f"hemidiff/L-R/{b}" for b in BAND_NAMES]
    else:
        raise ValueError(f"unknown hemispheric mode {hemispheric!r}")
    iu, ju = np.triu_indices(len(series), 1)
    names += [f"corr/{series[i][0]}.{series[i][1]}__{series[j][0]}.{series[j][1]}"
              for i, j in zip(iu, ju)]
    return names


def n_features(layout=DEFAULT_LAYOUT, hemispheric="per_pair"):
    p = layout.n_channels * N_BANDS
    h = len(layout.hemispheric_pairs) if hemispheric == "per_pair" else 1
    return 2 * p + N_BANDS * h + p * (p - 1) // 2


def category_of(column):
    category = column.split("/", 1)[0]
    if category not in CATEGORIES:
        raise ValueError(f"column {column!r} has no known category prefix")
    return category


@dataclass(frozen=True)
class WindowSpec:
    window_len_s: float
    stride_s: float = None
    min_valid_fraction: float = 0.5

    def __post_init__(self):
        if self.stride_s is None:
            object.__setattr__(self, "stride_s", self.window_len_s / 2.0)
        if not self.window_len_s > 0 or not self.stride_s > 0:
            raise ValueError("window length and stride must be positive")
        if self.stride_s > self.window_len_s:
            raise ValueError("stride must not exceed the window length")
        if not 0.0 < self.min_valid_fraction <= 1.0:
            raise ValueError("min_valid_fraction must lie in (0, 1]")


def enumerate_windows(n_samples, fs, spec):
    """Half-open ``(start, end)`` sample ranges of every window fully inside."""
    w = int(round(spec.window_len_s * fs))
    s = int(round(spec.stride_s * fs))
    if w < 2:
        raise ValueError("window must span at least 2 samples")
    if n_samples < w:
        raise ValueError(f"recording of {n_samples} samples is shorter than one "
                         f"{spec.window_len_s:g} s window ({w} samples)")
    count = (n_samples - w) // s + 1
    return [(k * s, k * s + w) for k in range(count)]


def power_series(decomp):
    """Squared expanded coefficients, shape ``(n_channels * 7, N)``.

    Rows are electrode-major, band level minor.
    """
    series = np.asarray(decomp.series if hasattr(decomp, "series") else decomp)
    return (series ** 2).reshape(-1, series.shape[-1])


@dataclass(frozen=True)
class Rejected:
    valid_fraction: float


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    valid_fraction: float
    window_start_s: float
    window_len_s: float
    subject_id: str = None
    session_id: str = None
    class_label: ClassLabel = None


def _pearson_upper(p):
    centered = p - p.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
    scale = np.abs(p).max(axis=1)
    constant = norms <= 1e-12 * np.maximum(scale, np.finfo(float).tiny) * np.sqrt(p.shape[1])
    safe = np.where(constant, 1.0, norms)
    corr = (centered @ centered.T) / np.outer(safe, safe)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    iu = np.triu_indices(p.shape[0], 1)
    return np.clip(corr[iu], -1.0, 1.0)


def window_features(power, mask, window, layout=DEFAULT_LAYOUT, min_valid_fraction=0.5,
                    hemispheric="per_pair"):
    """Feature vector for one window, or :class:`Rejected`.

    Only unmasked samples in ``window`` enter any statistic. Windows whose
    valid fraction is below ``min_valid_fraction``, or with fewer than two
    valid samples, are rejected.
    """
    start, end = window
    if start < 0 or end > power.shape[1] or end - start < 1:
        raise ValueError(f"window {window} outside a series of length {power.shape[1]}")
    valid = ~mask.flags[start:end]
    n_valid = int(np.count_nonzero(valid))
    fraction = n_valid / (end - start)
    fs = mask.sample_rate_hz
    if fraction < min_valid_fraction or n_valid < 2:
        return Rejected(fraction)
    p = power[:, start:end][:, valid]
    avg = p.mean(axis=1)
    var = p.var(axis=1)
    by_elec = avg.reshape(layout.n_channels, N_BANDS)
    if hemispheric == "per_pair":
        hemi = np.concatenate([by_elec[layout.index(l)] - by_elec[layout.index(r)]
                               for l, r in layout.hemispheric_pairs])
    else:
        left = [layout.index(l) for l, _ in layout.hemispheric_pairs]
        right = [layout.index(r) for _, r in layout.hemispheric_pairs]
        hemi = by_elec[left].mean(axis=0) - by_elec[right].mean(axis=0)
    values = np.concatenate([avg, var, hemi, _pearson_upper(p)])
    return FeatureVector(values, fraction, start / fs, (end - start) / fs)


@dataclass(eq=False)
class FeatureMatrix:
    """Rows of feature vectors with their window provenance."""

    values: np.ndarray
    columns: tuple
    subject: np.ndarray = None
    session: np.ndarray = None
    label: np.ndarray = None
    window_start_s: np.ndarray = None
    window_len_s: np.ndarray = None
    valid_fraction: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.values = np.asarray(self.values, dtype=float).reshape(-1, len(self.columns))
        n = self.values.shape[0]
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("feature column names must be unique")
        for name, default, dtype in (("subject", "", object), ("session", "", object),
                                     ("label", ClassLabel.INSTRUCTIONAL.value, object),
                                     ("window_start_s", 0.0, float),
                                     ("window_len_s", 0.0, float),
                                     ("valid_fraction", np.nan, float)):
            arr = getattr(self, name)
            arr = np.full(n, default, dtype=dtype) if arr is None else np.asarray(arr, dtype=dtype)
            if arr.shape != (n,):
                raise ValueError(f"provenance column {name} has {arr.shape} for {n} rows")
            setattr(self, name, arr)
        self.label = np.array([ClassLabel(v).value for v in self.label], dtype=object)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def y(self):
        """Labels in {-1, +1}; +1 is the recreational class."""
        return np.array([ClassLabel(v).sign for v in self.label], dtype=int)

    @property
    def recording_ids(self):
        return np.array([f"{s}/{t}/{l}" for s, t, l in
                         zip(self.subject, self.session, self.label)], dtype=object)

    def take(self, rows):
        rows = np.asarray(rows)
        return FeatureMatrix(self.values[rows], self.columns, self.subject[rows],
                             self.session[rows], self.label[rows], self.window_start_s[rows],
                             self.window_len_s[rows], self.valid_fraction[rows], dict(self.meta))

    def with_values(self, values):
        out = self.take(np.arange(self.n_rows))
        out.values = np.asarray(values, dtype=float)
        return out

    @classmethod
    def empty(cls, columns):
        return cls(np.zeros((0, len(columns))), columns)

    @classmethod
    def concat(cls, matrices, columns=None):
        matrices = list(matrices)
        if not matrices:
            if columns is None:
                raise ValueError("cannot concatenate zero matrices without columns")
            return cls.empty(columns)
        columns = matrices[0].columns
        for m in matrices[1:]:
            if m.columns != columns:
                raise ValueError("feature matrices have different column layouts")
        cat = lambda name: np.concatenate([getattr(m, name) for m in matrices])
        return cls(np.vstack([m.values for m in matrices]), columns, cat("subject"),
                   cat("session"), cat("label"), cat("window_start_s"), cat("window_len_s"),
                   cat("valid_fraction"))


def extract_features(rec, mask, spec, layout=DEFAULT_LAYOUT, hemispheric="per_pair",
                     stats=None):
    """Decompose, square, window and featurize one recording.

    Rejected windows are dropped. If ``stats`` is a dict it receives the
    window count, rejected count and per-window valid fractions.
    """
    if len(mask) != rec.n_samples:
        raise ValueError(f"mask length {len(mask)} != recording length {rec.n_samples}")
    columns = feature_names(layout, hemispheric)
    power = power_series(decompose_recording(rec))
    windows = enumerate_windows(rec.n_samples, rec.sample_rate_hz, spec)
    rows, fractions, rejected = [], [], 0
    all_fractions = []
    for window in windows:
        fv = window_features(power, mask, window, layout, spec.min_valid_fraction, hemispheric)
        all_fractions.append(fv.valid_fraction)
        if isinstance(fv, Rejected):
            rejected += 1
            continue
        rows.append(fv)
    if stats is not None:
        stats.update(n_windows=len(windows), n_rejected=rejected,
                     valid_fractions=all_fractions)
    n = len(rows)
    return FeatureMatrix(
        np.array([fv.values for fv in rows]).reshape(n, len(columns)),
        columns,
        np.full(n, rec.subject_id, dtype=object),
        np.full(n, rec.session_id, dtype=object),
        np.full(n, rec.class_label.value, dtype=object),
        np.array([fv.window_start_s for fv in rows], dtype=float),
        np.array([fv.window_len_s for fv in rows], dtype=float),
        np.array([fv.valid_fraction for fv in rows], dtype=float),
    )


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, values):
        values = np.asarray(values, dtype=float)
        ok = self.scale > 0
        out = np.zeros_like(values)
        out[:, ok] = (values[:, ok] - self.mean[ok]) / self.scale[ok]
        return out


def fit_standardizer(train):
    """Per-column mean and standard deviation of a non-empty training matrix."""
    values = train.values if isinstance(train, FeatureMatrix) else np.asarray(train, float)
    if values.shape[0] == 0:
        raise ValueError("cannot fit a standardizer on an empty matrix")
    mean = values.mean(axis=0)
    scale = values.std(axis=0)
    # columns that are constant up to rounding are treated as constant
    scale[scale <= 1e-12 * np.maximum(np.abs(mean), 1e-300)] = 0.0
    return Standardizer(mean, scale)


def apply_standardizer(s, m):
    if isinstance(m, FeatureMatrix):
        return m.with_values(s.transform(m.values))
    return s.transform(m)
