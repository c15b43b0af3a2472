"""Config-driven command line: ``synth``, ``mask``, ``features``, ``eval``, ``report``.

Every command reads a JSON config (``--config``), writes under ``--out``
and can be checked without side effects via ``--dry-run``. ``--seed``
overrides the config's ``seed`` field. Relative paths inside a config are
resolved against the config file's directory.

Exit codes: 0 success, 2 config error, 3 data error (unreadable or
malformed inputs, unwritable outputs), 4 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .artifacts import MaskConfig, compute_mask
from .classifiers import LinearModel, load_model, save_model
from .errors import ConfigError, ConvergenceError, DataError, SchemaError
from .evaluation import (CLASSIFIERS, Dataset, EvalReport, Protocol,
                         correlation_grid, extract_dataset_features, feature_selection_report,
                         fit_final_model, make_classifier, plan_folds, predictability_report,
                         run_experiment)
from .features import (DEFAULT_WINDOW_SIZES_S, FeatureMatrix, WindowSpec, extract_features,
                       feature_names)
from .io import (load_manifest, provenance_line, save_features, save_mask,
                 save_recording, write_manifest)
from .recording import (DEFAULT_LAYOUT, ClassLabel, Coupling, SyntheticSpec, generate_synthetic,
                        recording_seed)

log = logging.getLogger("wearable_eeg")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


# -- config helpers -------------------------------------------------------------


def load_config(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return cfg


def _check_keys(cfg, allowed, where="config"):
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _require(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return cfg[key]


def _path(cfg, key, base, where="config"):
    p = Path(_require(cfg, key, where))
    return p if p.is_absolute() else base / p


def _mask_config(cfg, required):
    raw = cfg.get("mask")
    if raw is None:
        if required:
            raise ConfigError("config: missing required field 'mask' (artifact thresholds)")
        return MaskConfig()
    if not isinstance(raw, dict):
        raise ConfigError("config field 'mask' must be an object")
    try:
        return MaskConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"config field 'mask': {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"config field 'mask': {exc}") from None


def _window_specs(cfg):
    sizes = cfg.get("window_sizes_s", list(DEFAULT_WINDOW_SIZES_S))
    if not isinstance(sizes, list) or not sizes:
        raise ConfigError("config field 'window_sizes_s' must be a non-empty list")
    specs = []
    for s in sizes:
        try:
            specs.append(WindowSpec(float(s), min_valid_fraction=float(
                cfg.get("min_valid_fraction", 0.5))))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config field 'window_sizes_s': {exc}") from None
    return specs


def _hemispheric(cfg):
    mode = cfg.get("hemispheric", "per_pair")
    if mode not in ("per_pair", "pooled"):
        raise ConfigError("config field 'hemispheric' must be 'per_pair' or 'pooled'")
    return mode


def _write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _write_json(path, doc, cfg):
    doc = {"provenance": provenance_line(cfg)[2:], **doc}
    return _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _stem(rec):
    return f"{rec.subject_id}_{rec.session_id}_{rec.class_label.value}"


# -- commands -------------------------------------------------------------------

SYNTH_KEYS = ("seed", "n_subjects", "sessions", "duration_s", "sample_rate_hz",
              "noise_amplitude_uv", "artifact_rate_per_min", "classes")


def synth_specs(cfg):
    """Every SyntheticSpec a synth config describes, validated up front."""
    _check_keys(cfg, SYNTH_KEYS)
    classes = _require(cfg, "classes")
    if not isinstance(classes, dict) or not classes:
        raise ConfigError("config field 'classes' must map class labels to profiles")
    n_subjects = _require(cfg, "n_subjects")
    if not isinstance(n_subjects, int) or n_subjects < 1:
        raise ConfigError("config field 'n_subjects' must be a positive integer")
    sessions = [str(s) for s in cfg.get("sessions", ["1", "2"])]
    seed = int(cfg.get("seed", 0))
    width = max(2, len(str(n_subjects)))
    try:
        labels = sorted(ClassLabel(k) for k in classes)
    except ValueError as exc:
        raise ConfigError(f"config field 'classes': {exc}") from None
    specs = []
    for si in range(n_subjects):
        for sj, session in enumerate(sessions):
            for ci, label in enumerate(labels):
                prof = classes[label.value]
                _check_keys(prof, ("band_power_profile", "coupling_profile"),
                            f"classes.{label.value}")
                try:
                    couplings = tuple(Coupling(tuple(a), tuple(b), float(s))
                                      for a, b, s in prof.get("coupling_profile", []))
                    specs.append(SyntheticSpec(
                        duration_s=float(_require(cfg, "duration_s")),
                        class_label=label,
                        band_power_profile=prof.get("band_power_profile", {}),
                        coupling_profile=couplings,
                        artifact_rate_per_min=float(cfg.get("artifact_rate_per_min", 0.0)),
                        noise_amplitude_uv=float(cfg.get("noise_amplitude_uv", 0.0)),
                        seed=recording_seed(seed, si, sj, ci),
                        sample_rate_hz=float(cfg.get("sample_rate_hz", 220.0)),
                        subject_id=f"S{si + 1:0{width}d}",
                        session_id=session))
                except ConfigError:
                    raise
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"classes.{label.value}: {exc}") from None
    return specs


def cmd_synth(cfg, base, out, dry_run):
    specs = synth_specs(cfg)
    # generate everything before touching the disk so a bad spec writes nothing
    recordings = [generate_synthetic(s) for s in specs]
    if dry_run:
        print(f"would write {len(recordings)} recordings and manifest.json to {out}")
        return EXIT_OK
    entries = []
    for rec in recordings:
        path = out / "recordings" / f"{_stem(rec)}.csv"
        meta = path.with_suffix(".json")
        save_recording(rec, path, meta, config=cfg)
        entries.append((path, meta))
    manifest = write_manifest(entries, out / "manifest.json", cfg)
    print(f"wrote {len(entries)} recordings and {manifest}")
    return EXIT_OK


def _load_dataset(cfg, base):
    manifest = _path(cfg, "manifest", base)
    return load_manifest(manifest)


def cmd_mask(cfg, base, out, dry_run):
    _check_keys(cfg, ("manifest", "mask", "seed"))
    mask_cfg = _mask_config(cfg, required=False)
    recordings = _load_dataset(cfg, base)
    if dry_run:
        print(f"would mask {len(recordings)} recordings into {out / 'masks'}")
        return EXIT_OK
    summary = {}
    for rec in recordings:
        mask = compute_mask(rec, mask_cfg)
        save_mask(mask, out / "masks" / f"{_stem(rec)}_mask.csv", config=cfg)
        summary[rec.recording_id] = {"valid_fraction": mask.valid_fraction,
                                     "n_runs": len(mask.runs())}
    _write_json(out / "masks" / "mask_log.json", {"recordings": summary}, cfg)
    print(f"wrote masks for {len(recordings)} recordings to {out / 'masks'}")
    return EXIT_OK


def cmd_features(cfg, base, out, dry_run):
    _check_keys(cfg, ("manifest", "mask", "window_sizes_s", "min_valid_fraction",
                      "hemispheric", "seed"))
    mask_cfg = _mask_config(cfg, required=False)
    specs = _window_specs(cfg)
    hemispheric = _hemispheric(cfg)
    recordings = _load_dataset(cfg, base)
    if dry_run:
        print(f"would write {len(recordings) * len(specs)} feature files to "
              f"{out / 'features'}")
        return EXIT_OK
    run_log = []
    for rec in recordings:
        mask = compute_mask(rec, mask_cfg)
        for spec in specs:
            stats = {}
            try:
                fm = extract_features(rec, mask, spec, DEFAULT_LAYOUT, hemispheric, stats)
            except (ValueError, FloatingPointError) as exc:
                raise DataError(f"{rec.recording_id}: {exc}") from exc
            path = out / "features" / f"{_stem(rec)}_w{spec.window_len_s:g}.csv"
            save_features(fm, path, cfg)
            entry = {"recording": rec.recording_id, "window_len_s": spec.window_len_s,
                     "file": path.name, "n_windows": stats["n_windows"],
                     "n_rejected": stats["n_rejected"],
                     "valid_fractions": [round(v, 6) for v in stats["valid_fractions"]],
                     "mask_valid_fraction": mask.valid_fraction, "warnings": []}
            if fm.n_rows == 0:
                msg = f"{rec.recording_id}: no valid {spec.window_len_s:g} s windows"
                entry["warnings"].append(msg)
                log.warning(msg)
            run_log.append(entry)
    _write_json(out / "features" / "run_log.json", {"files": run_log}, cfg)
    print(f"wrote {len(run_log)} feature files to {out / 'features'}")
    return EXIT_OK


EVAL_KEYS = ("manifest", "protocol", "classifiers", "window_sizes_s", "min_valid_fraction",
             "mask", "seed", "inner_k", "combined", "standardize", "save_models",
             "hemispheric")


def eval_plan(cfg):
    """Validated pieces of an eval config (without loading data)."""
    _check_keys(cfg, EVAL_KEYS)
    protocols = _require(cfg, "protocol")
    protocols = protocols if isinstance(protocols, list) else [protocols]
    try:
        protocols = [Protocol(p) for p in protocols]
    except ValueError:
        raise ConfigError(f"config field 'protocol': expected one of "
                          f"{[p.value for p in Protocol]}, got {protocols}") from None
    raw = _require(cfg, "classifiers")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("config field 'classifiers' must be a non-empty list")
    classifiers = []
    for i, c in enumerate(raw):
        c = {"name": c} if isinstance(c, str) else c
        where = f"classifiers[{i}]"
        _check_keys(c, ("name", "grid", "options"), where)
        name = _require(c, "name", where)
        if name not in CLASSIFIERS:
            raise ConfigError(f"config field '{where}.name': unknown classifier {name!r}; "
                              f"choose from {', '.join(sorted(CLASSIFIERS))}")
        try:
            classifiers.append(make_classifier(name, c.get("grid"), **c.get("options", {})))
        except ConfigError as exc:
            raise ConfigError(f"config field '{where}': {exc}") from None
    combined = cfg.get("combined", "mean")
    if combined not in ("mean", "overall"):
        raise ConfigError("config field 'combined' must be 'mean' or 'overall'")
    inner_k = cfg.get("inner_k", 3)
    if not isinstance(inner_k, int) or inner_k < 2:
        raise ConfigError("config field 'inner_k' must be an integer >= 2")
    return {"protocols": protocols, "classifiers": classifiers,
            "windows": _window_specs(cfg), "mask": _mask_config(cfg, required=True),
            "combined": combined, "inner_k": inner_k, "seed": int(cfg.get("seed", 0)),
            "standardize": bool(cfg.get("standardize", True)),
            "hemispheric": _hemispheric(cfg)}


def cmd_eval(cfg, base, out, dry_run):
    plan = eval_plan(cfg)
    ds = Dataset(_load_dataset(cfg, base))
    fold_plans = [plan_folds(ds, p) for p in plan["protocols"]]
    if dry_run:
        for fp in fold_plans:
            print(fp.describe())
        print(f"classifiers: {', '.join(c.name for c in plan['classifiers'])}; windows: "
              f"{', '.join(f'{w.window_len_s:g}' for w in plan['windows'])} s")
        return EXIT_OK
    report = EvalReport(config=cfg)
    models = []
    for spec in plan["windows"]:
        feats, _ = extract_dataset_features(ds, plan["mask"], spec, DEFAULT_LAYOUT,
                                            plan["hemispheric"])
        for clf in plan["classifiers"]:
            for protocol in plan["protocols"]:
                report.extend(run_experiment(
                    ds, protocol, clf, spec, plan["mask"], plan["seed"], plan["inner_k"],
                    plan["combined"], plan["standardize"], DEFAULT_LAYOUT, feats))
            if cfg.get("save_models"):
                everything = FeatureMatrix.concat(
                    [feats[k] for k in sorted(feats)],
                    feature_names(DEFAULT_LAYOUT, plan["hemispheric"]))
                model, _, gs = fit_final_model(clf, everything, plan["inner_k"], plan["seed"],
                                               plan["combined"], plan["standardize"])
                models.append((clf.name, spec.window_len_s, model, everything.columns, gs))
    header = provenance_line(cfg)
    _write_text(out / "report.csv", report.to_csv(header))
    _write_text(out / "summary.txt", header + "\n" + report.summary() + "\n")
    pred_lines = [header, "protocol,classifier,window_len_s,subject,tpr,tnr,predictable"]
    details = []
    for e in report.entries:
        for s in predictability_report(e.per_subject).subjects:
            pred_lines.append(",".join([e.protocol.value, e.classifier, f"{e.window_len_s:g}",
                                        s.subject, "" if s.tpr is None else f"{s.tpr:.17g}",
                                        "" if s.tnr is None else f"{s.tnr:.17g}",
                                        str(s.predictable).lower()]))
        details.append({"protocol": e.protocol.value, "classifier": e.classifier,
                        "window_len_s": e.window_len_s, "combined_definition": e.combined_mode,
                        "folds": [{"fold": f.fold.index, "test": f.fold.description,
                                   "status": f.status, "params": f.params,
                                   "inner_k": f.inner_k, "inner_grouping": f.inner_grouping}
                                  for f in e.folds]})
    _write_text(out / "predictability.csv", "\n".join(pred_lines) + "\n")
    _write_json(out / "eval_log.json", {"entries": details}, cfg)
    for name, window, model, columns, gs in models:
        save_model(model, out / "models" / f"{name}_w{window:g}.json", columns,
                   provenance={"line": header[2:], "params": gs.best,
                               "inner_grouping": gs.grouping, "inner_k": gs.k})
    print(report.summary())
    return EXIT_OK


def cmd_report(cfg, base, out, dry_run):
    _check_keys(cfg, ("model", "hemispheric", "seed"))
    model_path = _path(cfg, "model", base)
    columns = feature_names(DEFAULT_LAYOUT, _hemispheric(cfg))
    model, _ = load_model(model_path, columns)
    if not isinstance(model, LinearModel):
        raise ConfigError(f"{model_path}: feature-selection reports need an L1 logistic "
                          f"regression model, got a {type(model).__name__}")
    rep = feature_selection_report(model, columns)
    if dry_run:
        print(f"would write feature_selection.csv and correlation_grid.txt to {out}")
        return EXIT_OK
    header = provenance_line(cfg)
    _write_text(out / "feature_selection.csv", rep.to_csv(header))
    _write_text(out / "correlation_grid.txt",
                header + "\n" + correlation_grid(rep, DEFAULT_LAYOUT) + "\n")
    print(rep.to_csv().rstrip())
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "mask": cmd_mask, "features": cmd_features,
            "eval": cmd_eval, "report": cmd_report}


def build_parser():
    parser = argparse.ArgumentParser(prog="wearable-eeg",
                                     description="Wearable EEG mental-state toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--dry-run", action="store_true",
                       help="validate inputs and describe the run without writing files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "report":
            p.add_argument("--model", default=None, help="override the config model path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if getattr(args, "model", None):
            cfg["model"] = str(Path(args.model).resolve())
        base = Path(args.config).resolve().parent
        return COMMANDS[args.command](cfg, base, Path(args.out), args.dry_run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, SchemaError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
