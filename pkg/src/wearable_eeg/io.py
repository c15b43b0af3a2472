"""On-disk formats: recordings, feature matrices, mask exports, manifests.

All CSVs may start with ``#`` comment lines (tool version and config hash);
readers skip them. Floats are written with 17 significant digits so that a
save/load round trip is bit-exact.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, SchemaError
from .features import META_COLUMNS, FeatureMatrix, feature_names
from .recording import DEFAULT_LAYOUT, ClassLabel, EegRecording

FLOAT_FMT = "{:.17g}"
MANIFEST_SCHEMA_VERSION = 1


def fmt(value):
    return FLOAT_FMT.format(float(value))


def config_hash(config):
    """Short SHA-256 of a JSON-serializable config (key order insensitive)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def provenance_line(config=None):
    digest = config_hash(config) if config is not None else "none"
    return f"# wearable_eeg {__version__} config_sha256={digest}"


def _open_write(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def _data_lines(handle):
    # yields (line_number, text) skipping comments and blank lines
    for lineno, line in enumerate(handle, start=1):
        if line.startswith("#") or not line.strip():
            continue
        yield lineno, line


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def save_recording(rec, path, metadata_path=None, config=None):
    """Write ``rec`` as CSV plus a JSON metadata sidecar."""
    path = Path(path)
    with _open_write(path) as fh:
        fh.write(provenance_line(config) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_s", *rec.channel_names])
        t = np.arange(rec.n_samples) / rec.sample_rate_hz
        for i in range(rec.n_samples):
            writer.writerow([fmt(t[i]), *(fmt(v) for v in rec.samples[:, i])])
    meta = {
        "subject_id": rec.subject_id,
        "session_id": rec.session_id,
        "class_label": rec.class_label.value,
        "sample_rate_hz": rec.sample_rate_hz,
        "provenance": provenance_line(config)[2:],
    }
    metadata_path = Path(metadata_path) if metadata_path else sidecar_path(path)
    with _open_write(metadata_path) as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path, metadata_path


def load_metadata(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: cannot read metadata sidecar: {exc}") from exc
    for key in ("subject_id", "session_id", "class_label", "sample_rate_hz"):
        if key not in meta:
            raise SchemaError(f"{path}: metadata is missing {key!r}")
    try:
        meta["class_label"] = ClassLabel(meta["class_label"])
    except ValueError as exc:
        raise SchemaError(f"{path}: unknown class_label {meta['class_label']!r}") from exc
    try:
        rate = float(meta["sample_rate_hz"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: sample_rate_hz is not a number") from exc
    if not rate > 0 or not np.isfinite(rate):
        raise DataError(f"{path}: sample_rate_hz must be positive, got {rate}")
    meta["sample_rate_hz"] = rate
    return meta


def load_recording(path, layout=DEFAULT_LAYOUT, metadata_path=None):
    """Read a recording CSV; channels are matched to ``layout`` by header name."""
    path = Path(path)
    meta = load_metadata(metadata_path or sidecar_path(path))
    with open(path, encoding="utf-8", newline="") as fh:
        lines = _data_lines(fh)
        try:
            _, header_line = next(lines)
        except StopIteration:
            raise SchemaError(f"{path}: file has no header row") from None
        header = next(csv.reader([header_line]))
        header = [h.strip() for h in header]
        missing = [c for c in layout.channel_names if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        expected = {"t_s", *layout.channel_names}
        unknown = [c for c in header if c not in expected]
        if unknown:
            raise SchemaError(f"{path}: unknown column(s) {', '.join(unknown)}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names in header")
        cols = [header.index(c) for c in layout.channel_names]
        rows = []
        for row_no, (lineno, line) in enumerate(lines, start=1):
            cells = next(csv.reader([line]))
            if len(cells) != len(header):
                raise DataError(f"{path}: row {row_no} (line {lineno}) has {len(cells)} "
                                f"cells, expected {len(header)}")
            values = []
            for c in cols:
                try:
                    v = float(cells[c])
                except ValueError:
                    raise DataError(f"{path}: row {row_no} (line {lineno}), column "
                                    f"{header[c]}: not a number: {cells[c]!r}") from None
                if not np.isfinite(v):
                    raise DataError(f"{path}: row {row_no} (line {lineno}), column "
                                    f"{header[c]}: non-finite value {cells[c]!r}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: recording has no samples")
    samples = np.array(rows, dtype=float).T
    return EegRecording(meta["subject_id"], meta["session_id"], meta["class_label"],
                        samples, meta["sample_rate_hz"], layout.channel_names)


def save_features(matrix, path, config=None):
    with _open_write(path) as fh:
        fh.write(provenance_line(config) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*matrix.columns, *META_COLUMNS])
        for i in range(matrix.n_rows):
            writer.writerow([*(fmt(v) for v in matrix.values[i]),
                             matrix.subject[i], matrix.session[i], matrix.label[i],
                             fmt(matrix.window_start_s[i]), fmt(matrix.window_len_s[i])])
    return Path(path)


def load_features(path, layout=DEFAULT_LAYOUT, hemispheric="per_pair"):
    """Read a feature CSV and check its header against the canonical layout."""
    path = Path(path)
    expected = feature_names(layout, hemispheric)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = _data_lines(fh)
        try:
            _, header_line = next(lines)
        except StopIteration:
            raise SchemaError(f"{path}: feature file has no header row") from None
        header = next(csv.reader([header_line]))
        if tuple(header[-len(META_COLUMNS):]) != META_COLUMNS:
            raise SchemaError(f"{path}: header must end with {','.join(META_COLUMNS)}")
        declared = header[:-len(META_COLUMNS)]
        if len(declared) != len(expected):
            raise SchemaError(f"{path}: header declares {len(declared)} feature columns, "
                              f"layout has {len(expected)}")
        if declared != expected:
            bad = next(i for i, (a, b) in enumerate(zip(declared, expected)) if a != b)
            raise SchemaError(f"{path}: column {bad} is {declared[bad]!r}, "
                              f"expected {expected[bad]!r}")
        values, meta = [], []
        for row_no, (lineno, line) in enumerate(lines, start=1):
            cells = next(csv.reader([line]))
            if len(cells) != len(header):
                raise SchemaError(f"{path}: row {row_no} (line {lineno}) has {len(cells)} "
                                  f"cells, expected {len(header)}")
            try:
                values.append([float(c) for c in cells[:len(expected)]])
                tail = cells[len(expected):]
                meta.append((tail[0], tail[1], tail[2], float(tail[3]), float(tail[4])))
            except ValueError as exc:
                raise DataError(f"{path}: row {row_no} (line {lineno}): {exc}") from None
    n = len(values)
    cols = list(zip(*meta)) if meta else [[]] * 5
    return FeatureMatrix(np.array(values, dtype=float).reshape(n, len(expected)), expected,
                         np.array(cols[0], dtype=object), np.array(cols[1], dtype=object),
                         np.array(cols[2], dtype=object), np.array(cols[3], dtype=float),
                         np.array(cols[4], dtype=float))


def save_mask(mask, path, runs_path=None, config=None):
    """Write ``sample_index,flagged`` plus a ``start_s,end_s`` run summary."""
    path = Path(path)
    with _open_write(path) as fh:
        fh.write(provenance_line(config) + "\n")
        fh.write("sample_index,flagged\n")
        for i, flag in enumerate(mask.flags):
            fh.write(f"{i},{int(flag)}\n")
    runs_path = Path(runs_path) if runs_path else path.with_name(path.stem + "_runs.csv")
    fs = mask.sample_rate_hz
    with _open_write(runs_path) as fh:
        fh.write(provenance_line(config) + "\n")
        fh.write("start_s,end_s\n")
        for a, b in mask.runs():
            fh.write(f"{fmt(a / fs)},{fmt((b + 1) / fs)}\n")
    return path, runs_path


def write_manifest(entries, path, config=None):
    """``entries``: iterable of (recording path, metadata path)."""
    path = Path(path)
    base = path.parent
    items = []
    for rec_path, meta_path in entries:
        items.append({"recording": _relative(rec_path, base),
                      "metadata": _relative(meta_path, base)})
    doc = {"schema_version": MANIFEST_SCHEMA_VERSION,
           "provenance": provenance_line(config)[2:],
           "recordings": items}
    with _open_write(path) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def _relative(p, base):
    p = Path(p)
    try:
        return str(p.resolve().relative_to(base.resolve()))
    except ValueError:
        return str(p)


def read_manifest(path):
    """Resolved (recording path, metadata path) pairs listed in a manifest."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: cannot read manifest: {exc}") from exc
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported manifest schema_version "
                          f"{doc.get('schema_version')!r}")
    out = []
    for i, item in enumerate(doc.get("recordings", [])):
        try:
            rec, meta = item["recording"], item["metadata"]
        except (KeyError, TypeError):
            raise SchemaError(f"{path}: entry {i} needs 'recording' and 'metadata'") from None
        out.append(((path.parent / rec).resolve(), (path.parent / meta).resolve()))
    return out


def load_manifest(path, layout=DEFAULT_LAYOUT):
    recordings = [load_recording(r, layout, m) for r, m in read_manifest(path)]
    seen = set()
    for rec in recordings:
        if rec.key in seen:
            raise DataError(f"{path}: duplicate (subject, session, class) {rec.key}")
        seen.add(rec.key)
    return recordings
