"""Cross-validation protocols, grid search, error metrics and reports.

Positive class is the recreational video (+1). Two outer protocols exist:
intra-subject (train on one session of a subject, test on the other) and
leave-subject-out (test on every recording of one held-out subject).
Hyperparameters are picked per outer fold by an inner cross-validation that
never splits one recording's overlapping windows between its train and
validation parts.
"""

import csv
import io
import itertools
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .artifacts import MaskConfig, compute_mask
from .classifiers import (DbnConfig, predict_dbn, predict_forest, predict_linear,
                          predict_svm, train_dbn, train_l1_logreg, train_random_forest,
                          train_svm_rbf)
from .classifiers.svm import squared_distances
from .errors import ConfigError, DataError
from .features import (CATEGORIES, FeatureMatrix, apply_standardizer, category_of,
                       extract_features, fit_standardizer, series_labels)
from .recording import DEFAULT_LAYOUT, ClassLabel, recording_seed

TIE_ORDER = ("C", "gamma", "n_estimators")

LR_C_GRID = tuple(float(c) for c in np.logspace(-2, 3, 11))
SVM_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
SVM_GAMMA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11)) + tuple(float(k) for k in range(2, 11))
RF_N_ESTIMATORS_GRID = (5, 10, 15, 20)

CATEGORY_LABELS = {
    "avgpow": "avg power",
    "hemidiff": "hemispheric difference",
    "varpow": "power variance",
    "corr": "correlation",
}


class Protocol(str, Enum):
    INTRA_SUBJECT = "IntraSubject"
    LEAVE_SUBJECT_OUT = "LeaveSubjectOut"


@dataclass(frozen=True)
class Dataset:
    recordings: tuple

    def __post_init__(self):
        recs = tuple(self.recordings)
        object.__setattr__(self, "recordings", recs)
        seen = set()
        for rec in recs:
            if rec.key in seen:
                raise DataError(f"duplicate recording for (subject, session, class) {rec.key}")
            seen.add(rec.key)

    def __len__(self):
        return len(self.recordings)

    @property
    def by_id(self):
        return {rec.recording_id: rec for rec in self.recordings}

    def subjects(self):
        return sorted({rec.subject_id for rec in self.recordings})

    def sessions(self, subject):
        return sorted({rec.session_id for rec in self.recordings if rec.subject_id == subject})

    def ids(self, subject=None, session=None):
        return sorted(rec.recording_id for rec in self.recordings
                      if (subject is None or rec.subject_id == subject)
                      and (session is None or rec.session_id == session))


@dataclass(frozen=True)
class Fold:
    index: int
    train: tuple
    test: tuple
    test_subject: str
    test_session: Optional[str] = None

    @property
    def description(self):
        if self.test_session is None:
            return f"subject={self.test_subject}"
        return f"subject={self.test_subject} session={self.test_session}"


@dataclass(frozen=True)
class FoldPlan:
    protocol: Protocol
    folds: tuple

    def __len__(self):
        return len(self.folds)

    def describe(self):
        lines = [f"{self.protocol.value}: {len(self.folds)} folds"]
        for f in self.folds:
            lines.append(f"  fold {f.index}: test {f.description} "
                         f"({len(f.test)} recordings), train {len(f.train)} recordings")
        return "\n".join(lines)


def plan_folds(ds, protocol):
    """Outer folds for ``protocol``, ordered by subject then session."""
    protocol = Protocol(protocol)
    if len(ds) == 0:
        raise DataError("dataset is empty")
    folds = []
    if protocol is Protocol.LEAVE_SUBJECT_OUT:
        subjects = ds.subjects()
        if len(subjects) < 2:
            raise DataError("leave-subject-out needs at least two subjects")
        for subject in subjects:
            test = tuple(ds.ids(subject=subject))
            train = tuple(i for i in ds.ids() if i not in test)
            folds.append(Fold(len(folds), train, test, subject))
    else:
        for subject in ds.subjects():
            sessions = ds.sessions(subject)
            if len(sessions) != 2:
                raise DataError(f"intra-subject protocol needs exactly 2 sessions; subject "
                                f"{subject} has {len(sessions)}")
            for train_s, test_s in ((sessions[0], sessions[1]), (sessions[1], sessions[0])):
                folds.append(Fold(len(folds), tuple(ds.ids(subject, train_s)),
                                  tuple(ds.ids(subject, test_s)), subject, test_s))
    return FoldPlan(protocol, tuple(folds))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fn: int = 0
    fp: int = 0
    tn: int = 0

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fn + other.fn,
                               self.fp + other.fp, self.tn + other.tn)

    @property
    def total(self):
        return self.tp + self.fn + self.fp + self.tn

    @classmethod
    def from_labels(cls, y_true, y_pred):
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        pos, pred_pos = y_true > 0, y_pred > 0
        return cls(int(np.sum(pos & pred_pos)), int(np.sum(pos & ~pred_pos)),
                   int(np.sum(~pos & pred_pos)), int(np.sum(~pos & ~pred_pos)))


class ErrorRates(NamedTuple):
    fnr: Optional[float]
    fpr: Optional[float]
    combined: Optional[float]


def metrics(c, combined="mean"):
    """FNR, FPR and combined error; an undefined rate is ``None``.

    ``combined="mean"`` averages FNR and FPR; ``"overall"`` is the plain
    misclassification rate ``(fn + fp) / total``.
    """
    fnr = c.fn / (c.tp + c.fn) if c.tp + c.fn else None
    fpr = c.fp / (c.fp + c.tn) if c.fp + c.tn else None
    if combined == "mean":
        comb = (fnr + fpr) / 2 if fnr is not None and fpr is not None else None
    elif combined == "overall":
        comb = (c.fn + c.fp) / c.total if c.total else None
    else:
        raise ValueError(f"unknown combined-error definition {combined!r}")
    return ErrorRates(fnr, fpr, comb)


def _mean_defined(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def tie_key(params):
    return tuple(float(params.get(k, 0.0)) for k in TIE_ORDER)


# -- classifier adapters --------------------------------------------------------


class ClassifierSpec:
    """Uniform train/predict surface over one model family.

    Subclasses set ``name`` and ``default_grid`` and implement ``fit`` and
    ``predict``. ``predict_grid`` may be overridden to share work across
    grid points.
    """

    name = "base"
    default_grid = ({},)

    def __init__(self, grid=None, **options):
        self.grid = tuple(dict(p) for p in (grid if grid is not None else self.default_grid))
        if not self.grid:
            raise ConfigError(f"{self.name}: hyperparameter grid is empty")
        self.options = options

    def fit(self, X, y, params, seed):
        raise NotImplementedError

    def predict(self, model, X):
        raise NotImplementedError

    def predict_grid(self, X_train, y_train, X_val, grid, seed):
        return [self.predict(self.fit(X_train, y_train, p, seed), X_val) for p in grid]

    def describe(self):
        return {"name": self.name, "options": self.options}


class L1LogisticRegression(ClassifierSpec):
    name = "l1_logreg"
    default_grid = tuple({"C": c} for c in LR_C_GRID)

    def fit(self, X, y, params, seed):
        return train_l1_logreg(X, y, params["C"], tol=self.options.get("tol", 1e-5),
                               fit_intercept=self.options.get("fit_intercept", True))

    def predict(self, model, X):
        return predict_linear(model, X)[0]


class RbfSvm(ClassifierSpec):
    """RBF SVM whose inputs are divided by ``sqrt(n_features)``.

    With that scaling ``gamma`` acts on the mean squared per-feature
    distance, which keeps the kernel away from the identity matrix when
    hundreds of standardized features are in play. Set
    ``scale_by_dim=False`` to feed features unscaled. ``tol`` and
    ``max_iter`` are passed to the solver.
    """

    name = "svm_rbf"
    default_grid = tuple({"C": c, "gamma": g} for c in SVM_C_GRID for g in SVM_GAMMA_GRID)

    def _solver(self):
        return {"tol": self.options.get("tol", 1e-3),
                "max_iter": int(self.options.get("max_iter", 1_000_000))}

    def _scale(self, X):
        if self.options.get("scale_by_dim", True):
            return X / np.sqrt(X.shape[1])
        return X

    def fit(self, X, y, params, seed):
        return train_svm_rbf(self._scale(X), y, params["C"], params["gamma"], **self._solver())

    def predict(self, model, X):
        return predict_svm(model, self._scale(X))[0]

    def predict_grid(self, X_train, y_train, X_val, grid, seed):
        Xt, Xv = self._scale(X_train), self._scale(X_val)
        d_train = squared_distances(Xt, Xt)
        d_val = squared_distances(Xv, Xt)
        out = []
        for p in grid:
            model = train_svm_rbf(Xt, y_train, p["C"], p["gamma"], **self._solver(),
                                  kernel=np.exp(-p["gamma"] * d_train))
            k_val = np.exp(-p["gamma"] * d_val)[:, model.alpha > 0]
            out.append(predict_svm(model, Xv, kernel=k_val)[0])
        return out


class RandomForest(ClassifierSpec):
    name = "random_forest"
    default_grid = tuple({"n_estimators": n} for n in RF_N_ESTIMATORS_GRID)

    def fit(self, X, y, params, seed):
        return train_random_forest(X, y, int(params["n_estimators"]), seed)

    def predict(self, model, X):
        return predict_forest(model, X)


class DeepBeliefNet(ClassifierSpec):
    name = "dbn"
    default_grid = ({},)

    def __init__(self, grid=None, **options):
        super().__init__(grid, **options)
        cfg = dict(options)
        if "sizes" in cfg:
            cfg["sizes"] = tuple(cfg["sizes"])
        self.config = DbnConfig(**cfg)

    def fit(self, X, y, params, seed):
        return train_dbn(X, y, replace(self.config, seed=int(seed), **params))

    def predict(self, model, X):
        return predict_dbn(model, X)[0]


CLASSIFIERS = {cls.name: cls for cls in (L1LogisticRegression, RbfSvm, RandomForest,
                                          DeepBeliefNet)}


def make_classifier(name, grid=None, **options):
    try:
        cls = CLASSIFIERS[name]
    except KeyError:
        raise ConfigError(f"unknown classifier {name!r}; choose from "
                          f"{', '.join(sorted(CLASSIFIERS))}") from None
    try:
        return cls(grid, **options)
    except TypeError as exc:
        raise ConfigError(f"{name}: invalid options: {exc}") from None


# -- inner cross-validation -----------------------------------------------------


@dataclass
class GridSearchResult:
    best: dict
    scores: list = field(default_factory=list)  # (params, mean combined error)
    k: int = 0
    grouping: str = "none"


def inner_folds(train, k=3, seed=0):
    """Validation splits of a training matrix that keep recordings intact.

    Recordings are dealt into ``k`` folds per class (stratified). If either
    class has fewer than two recordings, each recording is instead cut into
    ``k`` contiguous time blocks; training windows overlapping a validation
    window of the same recording are purged. ``k`` shrinks to the feasible
    maximum; the returned mode is "recording", "time_block" or "none".
    """
    ids = train.recording_ids
    labels = train.y
    by_class = {}
    for rid, lab in zip(ids, labels):
        by_class.setdefault(int(lab), set()).add(rid)
    if len(by_class) < 2:
        return [], 0, "none"
    k_rec = min(k, min(len(v) for v in by_class.values()))
    rows = np.arange(train.n_rows)
    if k_rec >= 2:
        rng = np.random.default_rng(seed)
        fold_of = {}
        offset = 0
        for lab in sorted(by_class):
            members = sorted(by_class[lab])
            for pos, idx in enumerate(rng.permutation(len(members))):
                fold_of[members[idx]] = (pos + offset) % k_rec
            offset += len(members)
        assign = np.array([fold_of[r] for r in ids])
        return [(rows[assign != f], rows[assign == f]) for f in range(k_rec)], k_rec, "recording"

    per_rec = {rid: rows[ids == rid] for rid in sorted(set(ids))}
    k_blk = min(k, min(r.size for r in per_rec.values()))
    if k_blk < 2:
        return [], 0, "none"
    blocks = {}
    for rid, r in per_rec.items():
        ordered = r[np.argsort(train.window_start_s[r], kind="stable")]
        blocks[rid] = np.array_split(ordered, k_blk)
    splits = []
    for b in range(k_blk):
        val, tr = [], []
        for rid, parts in blocks.items():
            v = parts[b]
            val.append(v)
            rest = np.concatenate([parts[j] for j in range(k_blk) if j != b])
            v_start = train.window_start_s[v]
            keep = [i for i in rest
                    if np.all(np.abs(train.window_start_s[i] - v_start) >= train.window_len_s[i])]
            tr.append(np.array(keep, dtype=int))
        splits.append((np.concatenate(tr), np.concatenate(val)))
    return splits, k_blk, "time_block"


def grid_search(classifier, train, grid=None, inner_k=3, seed=0, combined="mean",
                standardize=True):
    """Pick the grid point with the lowest mean inner-CV combined error.

    Ties go to the smaller C, then smaller gamma, then fewer trees.
    """
    grid = sorted((dict(p) for p in (grid if grid is not None else classifier.grid)),
                  key=tie_key)
    if not grid:
        raise ConfigError("hyperparameter grid is empty")
    if len(grid) == 1:
        return GridSearchResult(grid[0], [(grid[0], None)], 0, "single_point")
    splits, k, mode = inner_folds(train, inner_k, seed)
    errors = [[] for _ in grid]
    for tr, va in splits:
        y_tr, y_va = train.y[tr], train.y[va]
        if len(set(y_tr)) < 2 or len(y_va) == 0:
            continue
        X_tr, X_va = train.values[tr], train.values[va]
        if standardize:
            std = fit_standardizer(X_tr)
            X_tr, X_va = std.transform(X_tr), std.transform(X_va)
        preds = classifier.predict_grid(X_tr, y_tr, X_va, grid, seed)
        for g, pred in enumerate(preds):
            errors[g].append(metrics(ConfusionCounts.from_labels(y_va, pred), combined).combined)
    scores = [(p, _mean_defined(e)) for p, e in zip(grid, errors)]
    defined = [(round(s, 12), i) for i, (_, s) in enumerate(scores) if s is not None]
    best = grid[min(defined)[1]] if defined else grid[0]
    return GridSearchResult(best, scores, k, mode)


# -- experiments ----------------------------------------------------------------


def extract_dataset_features(ds, mask_cfg, window_spec, layout=DEFAULT_LAYOUT,
                             hemispheric="per_pair"):
    """Feature matrix per recording id, plus per-recording extraction stats."""
    features, stats = {}, {}
    for rec in ds.recordings:
        mask = compute_mask(rec, mask_cfg)
        st = {}
        features[rec.recording_id] = extract_features(rec, mask, window_spec, layout,
                                                      hemispheric, stats=st)
        st["mask_valid_fraction"] = mask.valid_fraction
        stats[rec.recording_id] = st
    return features, stats


@dataclass
class FoldResult:
    fold: Fold
    n_train: int = 0
    n_test: int = 0
    counts: ConfusionCounts = ConfusionCounts()
    rates: ErrorRates = ErrorRates(None, None, None)
    params: dict = field(default_factory=dict)
    inner_k: int = 0
    inner_grouping: str = "none"
    status: str = "ok"
    per_subject: dict = field(default_factory=dict)
    standardizer_mean: np.ndarray = None


@dataclass
class EvalEntry:
    protocol: Protocol
    classifier: str
    window_len_s: float
    folds: list
    combined_mode: str = "mean"

    @property
    def rates(self):
        ok = [f for f in self.folds if f.status == "ok"]
        return ErrorRates(_mean_defined([f.rates.fnr for f in ok]),
                          _mean_defined([f.rates.fpr for f in ok]),
                          _mean_defined([f.rates.combined for f in ok]))

    @property
    def per_subject(self):
        out = {}
        for f in self.folds:
            for subject, c in f.per_subject.items():
                out[subject] = out.get(subject, ConfusionCounts()) + c
        return dict(sorted(out.items()))


def _fmt_rate(v):
    return "" if v is None else f"{v:.17g}"


REPORT_COLUMNS = ("protocol", "classifier", "window_len_s", "fold", "test", "n_train",
                  "n_test", "tp", "fn", "fp", "tn", "fnr", "fpr", "combined", "params",
                  "status")


@dataclass
class EvalReport:
    entries: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def extend(self, other):
        self.entries.extend(other.entries)
        return self

    def entry(self, protocol=None, classifier=None, window_len_s=None):
        for e in self.entries:
            if ((protocol is None or e.protocol == Protocol(protocol))
                    and (classifier is None or e.classifier == classifier)
                    and (window_len_s is None or e.window_len_s == window_len_s)):
                return e
        raise KeyError((protocol, classifier, window_len_s))

    def rows(self):
        for e in self.entries:
            base = (e.protocol.value, e.classifier, f"{e.window_len_s:g}")
            total = ConfusionCounts()
            for f in e.folds:
                total = total + f.counts
                yield base + (str(f.fold.index), f.fold.description, str(f.n_train),
                              str(f.n_test), str(f.counts.tp), str(f.counts.fn),
                              str(f.counts.fp), str(f.counts.tn), _fmt_rate(f.rates.fnr),
                              _fmt_rate(f.rates.fpr), _fmt_rate(f.rates.combined),
                              json.dumps(f.params, sort_keys=True), f.status)
            r = e.rates
            yield base + ("mean", "all folds", "", "", str(total.tp), str(total.fn),
                          str(total.fp), str(total.tn), _fmt_rate(r.fnr), _fmt_rate(r.fpr),
                          _fmt_rate(r.combined), "", f"combined={e.combined_mode}")

    def to_csv(self, header_line=None):
        buf = io.StringIO()
        if header_line:
            buf.write(header_line + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(self.rows())
        return buf.getvalue()

    def summary(self):
        lines = []
        for e in self.entries:
            r = e.rates
            pct = lambda v: "  n/a " if v is None else f"{100 * v:5.1f}%"
            skipped = sum(f.status != "ok" for f in e.folds)
            lines.append(f"{e.protocol.value:<16} {e.classifier:<14} {e.window_len_s:>6g} s  "
                         f"FNR {pct(r.fnr)}  FPR {pct(r.fpr)}  combined {pct(r.combined)}"
                         f"  ({len(e.folds) - skipped}/{len(e.folds)} folds, "
                         f"combined={e.combined_mode})")
        return "\n".join(lines)


def run_experiment(ds, protocol, classifier, window_spec, mask_cfg=MaskConfig(), seed=0,
                   inner_k=3, combined="mean", standardize=True, layout=DEFAULT_LAYOUT,
                   features=None):
    """Evaluate one classifier at one window size under one protocol.

    ``features`` may hold precomputed per-recording feature matrices (as
    returned by :func:`extract_dataset_features`) to share extraction
    across classifiers.
    """
    if features is None:
        features, _ = extract_dataset_features(ds, mask_cfg, window_spec, layout)
    plan = plan_folds(ds, protocol)
    columns = next(iter(features.values())).columns
    results = []
    for fold in plan.folds:
        leak = set(fold.train) & set(fold.test)
        if leak:
            raise AssertionError(f"fold {fold.index} trains on test recordings {sorted(leak)}")
        fold_seed = recording_seed(seed, fold.index)
        train = FeatureMatrix.concat([features[r] for r in fold.train], columns)
        test = FeatureMatrix.concat([features[r] for r in fold.test], columns)
        res = FoldResult(fold, train.n_rows, test.n_rows)
        if test.n_rows == 0:
            res.status = "skipped: no valid test windows"
        elif len(set(train.y)) < 2:
            res.status = "skipped: training data lack one class"
        else:
            gs = grid_search(classifier, train, inner_k=inner_k, seed=fold_seed,
                             combined=combined, standardize=standardize)
            X_tr, X_te = train.values, test.values
            if standardize:
                std = fit_standardizer(train)
                X_tr, X_te = std.transform(X_tr), std.transform(X_te)
                res.standardizer_mean = std.mean
            model = classifier.fit(X_tr, train.y, gs.best, fold_seed)
            pred = classifier.predict(model, X_te)
            res.counts = ConfusionCounts.from_labels(test.y, pred)
            res.rates = metrics(res.counts, combined)
            res.params = gs.best
            res.inner_k, res.inner_grouping = gs.k, gs.grouping
            for subject in sorted(set(test.subject)):
                rows = test.subject == subject
                res.per_subject[subject] = ConfusionCounts.from_labels(test.y[rows], pred[rows])
        results.append(res)
    entry = EvalEntry(plan.protocol, classifier.name, float(window_spec.window_len_s),
                      results, combined)
    return EvalReport([entry])


def fit_final_model(classifier, matrix, inner_k=3, seed=0, combined="mean", standardize=True):
    """Grid-search and train on every row of ``matrix``.

    Returns ``(model, standardizer or None, GridSearchResult)``.
    """
    gs = grid_search(classifier, matrix, inner_k=inner_k, seed=seed, combined=combined,
                     standardize=standardize)
    X = matrix.values
    std = None
    if standardize:
        std = fit_standardizer(matrix)
        X = std.transform(X)
    return classifier.fit(X, matrix.y, gs.best, seed), std, gs


# -- reports --------------------------------------------------------------------


@dataclass
class FeatureSelectionReport:
    nonzero: int
    counts: dict
    selected: list

    def to_csv(self, header_line=None):
        buf = io.StringIO()
        if header_line:
            buf.write(header_line + "\n")
        buf.write("category,count\n")
        for cat in CATEGORIES:
            buf.write(f"{CATEGORY_LABELS[cat]},{self.counts[cat]}\n")
        buf.write(f"total nonzero,{self.nonzero}\n")
        return buf.getvalue()


def feature_selection_report(model, columns):
    """Nonzero weights of a linear model bucketed by feature category."""
    columns = tuple(columns)
    w = np.asarray(model.w)
    if w.size != len(columns):
        raise ValueError(f"model has {w.size} weights but the layout has {len(columns)} columns")
    selected = [c for c, v in zip(columns, w) if v != 0]
    counts = {cat: 0 for cat in CATEGORIES}
    for c in selected:
        counts[category_of(c)] += 1
    return FeatureSelectionReport(len(selected), counts, selected)


def correlation_grid(report, layout=DEFAULT_LAYOUT):
    """Text occupancy grid of selected correlation features (upper triangle)."""
    labels = [f"{e}.{b}" for e, b in series_labels(layout)]
    index = {lab: i for i, lab in enumerate(labels)}
    p = len(labels)
    grid = np.zeros((p, p), dtype=bool)
    for col in report.selected:
        if category_of(col) != "corr":
            continue
        a, b = col.split("/", 1)[1].split("__")
        grid[index[a], index[b]] = True
    width = max(len(lab) for lab in labels)
    lines = [" " * width + " " + "".join(f"{j % 10}" for j in range(p))]
    for i, lab in enumerate(labels):
        cells = "".join(" " if j <= i else ("X" if grid[i, j] else ".") for j in range(p))
        lines.append(f"{lab:>{width}} {cells}")
    lines.append(f"columns: row labels in the same order, index mod 10; "
                 f"{int(grid.sum())} selected")
    return "\n".join(lines)


class SubjectPredictability(NamedTuple):
    subject: str
    tpr: Optional[float]
    tnr: Optional[float]
    predictable: bool


@dataclass
class PredictabilityReport:
    subjects: list

    @property
    def n_predictable(self):
        return sum(s.predictable for s in self.subjects)


def predictability_report(per_subject, threshold=0.6):
    """Per-subject TPR/TNR and whether both exceed ``threshold`` strictly."""
    rows = []
    for subject, c in sorted(per_subject.items()):
        tpr = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
        tnr = c.tn / (c.tn + c.fp) if c.tn + c.fp else None
        ok = tpr is not None and tnr is not None and tpr > threshold and tnr > threshold
        rows.append(SubjectPredictability(subject, tpr, tnr, ok))
    return PredictabilityReport(rows)
