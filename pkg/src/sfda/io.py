"""On-disk formats: feature and label files, hub manifests, ground truth, reports.

Binary feature file (little-endian)::

    b"SFDAFEAT"  u32 version=1  u64 N  u64 D  N*D float32, row-major

Binary label file::

    b"SFDALABL"  u32 version=1  u64 N  u32 C  N uint32 class ids

Files ending in ``.csv`` are read as text instead (features: one row per
line; labels: one id per line).  CSV is never written.
"""
from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DataError,
    FormatError,
    LabelOutOfRange,
    ManifestError,
    NonFiniteValue,
    TruncatedPayload,
    VersionUnsupported,
)
from .fda import FeatureSet

FEATURE_MAGIC = b"SFDAFEAT"
LABEL_MAGIC = b"SFDALABL"
FORMAT_VERSION = 1
REPORT_SCHEMA_VERSION = 1

_FEAT_HEADER = struct.Struct("<8sIQQ")  # 28 bytes
_LABEL_HEADER = struct.Struct("<8sIQI")  # 24 bytes


def _is_csv(path):
    return str(path).lower().endswith(".csv")


def _check_header(data, header, magic, path):
    if len(data) < 8 or data[:8] != magic:
        raise BadMagic(f"expected magic {magic!r}", path, 0)
    if len(data) < 12:
        raise TruncatedPayload("header ends before version field", path, 8)
    (version,) = struct.unpack_from("<I", data, 8)
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"version {version} (supported: {FORMAT_VERSION})", path, 8)
    if len(data) < header.size:
        raise TruncatedPayload("header is incomplete", path, len(data))
    return header.unpack_from(data, 0)


def write_feature_file(path, features):
    X = np.asarray(features)
    if X.ndim != 2:
        raise DataError(f"features must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("refusing to write non-finite features")
    X32 = np.ascontiguousarray(X, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_FEAT_HEADER.pack(FEATURE_MAGIC, FORMAT_VERSION, X.shape[0], X.shape[1]))
        f.write(X32.tobytes())


def read_feature_file(path):
    """Read an ``N x D`` feature matrix as float64."""
    if _is_csv(path):
        return _read_feature_csv(path)
    data = Path(path).read_bytes()
    _, _, n, d = _check_header(data, _FEAT_HEADER, FEATURE_MAGIC, path)
    start = _FEAT_HEADER.size
    count = n * d
    have = (len(data) - start) // 4
    if have < count:
        raise TruncatedPayload(f"payload holds {have} of {count} floats", path, start + 4 * have)
    if len(data) > start + 4 * count:
        raise FormatError("trailing bytes after payload", path, start + 4 * count)
    X = np.frombuffer(data, dtype="<f4", count=count, offset=start)
    bad = np.flatnonzero(~np.isfinite(X))
    if bad.size:
        raise NonFiniteValue(f"non-finite value at element {int(bad[0])}", path, start + 4 * int(bad[0]))
    return X.reshape(n, d).astype(np.float64)


def _read_feature_csv(path):
    rows = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise FormatError(f"line {lineno}: not a number", path) from None
    if not rows:
        raise FormatError("no rows", path)
    if len({len(r) for r in rows}) != 1:
        raise FormatError("rows have different lengths", path)
    X = np.array(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        raise NonFiniteValue(f"non-finite value at row {bad[0][0]}, column {bad[0][1]}", path)
    return X


def write_labels(path, labels, num_classes):
    y = np.asarray(labels)
    c = int(num_classes)
    if y.ndim != 1:
        raise DataError("labels must be 1-D")
    if y.size and (y.min() < 0 or y.max() >= c):
        raise DataError(f"labels must lie in [0, {c})")
    with open(path, "wb") as f:
        f.write(_LABEL_HEADER.pack(LABEL_MAGIC, FORMAT_VERSION, y.shape[0], c))
        f.write(np.ascontiguousarray(y, dtype="<u4").tobytes())


def read_labels(path, num_classes=None):
    """Read class ids; returns ``(labels, num_classes)``.

    For binary files ``num_classes`` comes from the header (and must agree
    with the argument when both are given).  For CSV it defaults to
    ``max(label) + 1``.
    """
    if _is_csv(path):
        return _read_labels_csv(path, num_classes)
    data = Path(path).read_bytes()
    _, _, n, c = _check_header(data, _LABEL_HEADER, LABEL_MAGIC, path)
    if num_classes is not None and int(num_classes) != c:
        raise FormatError(f"header declares C={c}, expected {num_classes}", path, 20)
    start = _LABEL_HEADER.size
    have = (len(data) - start) // 4
    if have < n:
        raise TruncatedPayload(f"payload holds {have} of {n} labels", path, start + 4 * have)
    if len(data) > start + 4 * n:
        raise FormatError("trailing bytes after payload", path, start + 4 * n)
    y = np.frombuffer(data, dtype="<u4", count=n, offset=start).astype(np.int64)
    bad = np.flatnonzero(y >= c)
    if bad.size:
        i = int(bad[0])
        raise LabelOutOfRange(f"label {int(y[i])} at index {i} is >= C={c}", path, start + 4 * i, index=i)
    return y, c


def _read_labels_csv(path, num_classes):
    ids = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            s = line.strip()
            if not s:
                continue
            try:
                v = int(s)
            except ValueError:
                raise FormatError(f"line {lineno}: not an integer", path) from None
            if v < 0:
                raise LabelOutOfRange(f"negative label at index {len(ids)}", path, index=len(ids))
            ids.append(v)
    if not ids:
        raise FormatError("no labels", path)
    y = np.array(ids, dtype=np.int64)
    c = int(y.max()) + 1 if num_classes is None else int(num_classes)
    bad = np.flatnonzero(y >= c)
    if bad.size:
        i = int(bad[0])
        raise LabelOutOfRange(f"label {int(y[i])} at index {i} is >= C={c}", path, index=i)
    return y, c


# --- manifests -------------------------------------------------------------


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    features_path: str
    feature_dim: int


@dataclass(frozen=True)
class HubManifest:
    dataset_name: str
    num_classes: int
    labels_path: str
    models: tuple
    root: str = "."

    def resolve(self, rel):
        return os.path.join(self.root, rel)

    def to_dict(self):
        return {
            "dataset_name": self.dataset_name,
            "num_classes": self.num_classes,
            "labels_path": self.labels_path,
            "models": [
                {"model_id": m.model_id, "features_path": m.features_path, "feature_dim": m.feature_dim}
                for m in self.models
            ],
        }


def read_manifest(path):
    """Parse a JSON hub manifest; relative paths resolve against its directory."""
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc}", path) from None
    try:
        models = tuple(
            ModelEntry(str(m["model_id"]), str(m["features_path"]), int(m["feature_dim"]))
            for m in raw["models"]
        )
        manifest = HubManifest(
            dataset_name=str(raw["dataset_name"]),
            num_classes=int(raw["num_classes"]),
            labels_path=str(raw["labels_path"]),
            models=models,
            root=os.path.dirname(os.path.abspath(path)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"missing or malformed field: {exc}", path) from None
    ids = [m.model_id for m in models]
    if len(set(ids)) != len(ids):
        raise ManifestError("duplicate model ids", path)
    if not models:
        raise ManifestError("manifest lists no models", path)
    return manifest


def write_manifest(path, manifest):
    with open(path, "w") as f:
        json.dump(manifest.to_dict(), f, indent=2)
        f.write("\n")


def load_hub(manifest):
    """Read every feature file of a manifest into :class:`FeatureSet` objects."""
    if not isinstance(manifest, HubManifest):
        manifest = read_manifest(manifest)
    labels, c = read_labels(manifest.resolve(manifest.labels_path), manifest.num_classes)
    hub = []
    for m in manifest.models:
        path = manifest.resolve(m.features_path)
        X = read_feature_file(path)
        if X.shape[1] != m.feature_dim:
            raise ManifestError(
                f"model {m.model_id!r}: declared D={m.feature_dim}, file has D={X.shape[1]}", path
            )
        if X.shape[0] != labels.shape[0]:
            raise ManifestError(
                f"model {m.model_id!r}: {X.shape[0]} rows but {labels.shape[0]} labels", path
            )
        hub.append(FeatureSet(m.model_id, X, labels, c))
    return manifest, hub


# --- ground truth ----------------------------------------------------------


def read_ground_truth(path):
    """``model_id,accuracy`` CSV -> dict of accuracy (percent) by model id."""
    out = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["model_id", "accuracy"]:
            raise FormatError("header must be 'model_id,accuracy'", path)
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"line {lineno}: expected 2 fields", path)
            mid = row[0].strip()
            try:
                acc = float(row[1])
            except ValueError:
                raise FormatError(f"line {lineno}: accuracy is not a number", path) from None
            if not math.isfinite(acc):
                raise FormatError(f"line {lineno}: non-finite accuracy", path)
            if mid in out:
                raise FormatError(f"line {lineno}: duplicate model id {mid!r}", path)
            out[mid] = acc
    if not out:
        raise FormatError("no rows", path)
    return out


def write_ground_truth(path, accuracies):
    with open(path, "w", newline="") as f:
        f.write("model_id,accuracy\n")
        for mid, acc in accuracies.items():
            f.write(f"{mid},{acc!r}\n")


# --- reports ---------------------------------------------------------------


def _fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise DataError(f"cannot serialize non-finite value {x}")
    return f"{x:.8e}"


def _render(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_render(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + _render(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(doc):
    """Canonical text of a report: 2-space indent, floats as 9 significant digits."""
    return _render(doc) + "\n"


def _sorted_rows(rows, key):
    # descending by key, ties keep input order
    return sorted(rows, key=lambda r: -r[key])


def scores_document(scores, dataset_name, config=None):
    if not scores:
        raise DataError("refusing to write an empty report")
    rows = [
        {
            "model_id": s.model_id,
            "score": s.score,
            "gain_over_prior": s.gain,
            "stage1_mean_logp": s.stage1_mean_logp,
            "stage2_mean_logp": s.stage2_mean_logp,
            "lambda_stage1": s.lambda_stage1,
            "lambda_stage2": s.lambda_stage2,
            "degenerate": s.degenerate,
            "clamped": s.clamped,
        }
        for s in scores
    ]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "scores",
        "dataset_name": dataset_name,
        "config": dict(config or {}),
        "rows": _sorted_rows(rows, "score"),
    }


def ensemble_document(report, dataset_name, config=None):
    if not report.rows:
        raise DataError("refusing to write an empty report")
    rows = [
        {
            "model_id": r.model_id,
            "t_ens": r.t_ens,
            "t_sfda": r.t_sfda,
            "t_com": r.t_com,
            "t_sfda_combined": r.t_sfda_combined,
            "t_com_combined": r.t_com_combined,
        }
        for r in report.rows
    ]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "ensemble",
        "dataset_name": dataset_name,
        "config": dict(config or {}),
        "r": report.r,
        "k": report.k,
        "n_ens": report.n_ens,
        "normalized": report.normalized,
        "selected_top_k": list(report.selected_top_k),
        "sfda_top_k": list(report.sfda_top_k),
        "excluded": list(report.excluded),
        "rows": _sorted_rows(rows, "t_ens"),
    }


def evaluation_document(evaluation, scores, truth, dataset_name):
    """``scores`` and ``truth`` are dicts keyed by model id."""
    if not scores:
        raise DataError("refusing to write an empty report")
    rows = [{"model_id": m, "score": scores[m], "accuracy": truth[m]} for m in scores]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "evaluation",
        "dataset_name": dataset_name,
        "tau": evaluation.tau,
        "tau_w": evaluation.tau_w,
        "pearson_r": evaluation.pearson_r,
        "pearson_rw": evaluation.pearson_rw,
        "rel_at_k": {str(k): v for k, v in sorted(evaluation.rel_at_k.items())},
        "rows": _sorted_rows(rows, "score"),
    }


def write_report(doc, path):
    text = dumps_report(doc)
    with open(path, "w", newline="\n") as f:
        f.write(text)


def read_report(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON report: {exc}", path) from None
    if not isinstance(doc, dict) or doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise FormatError("unsupported report schema", path)
    return doc


def report_scores(doc):
    """Model id -> score mapping from a parsed scores (or ensemble) report.

    Scores reports carry ``gain_over_prior`` next to ``score``; when every row
    has it, the gain is used.  It ranks models identically and, unlike the
    rendered score, does not lose their differences to rounding.
    """
    kind = doc.get("kind")
    if kind == "ensemble":
        key = "t_ens"
    elif kind == "scores":
        rows = doc["rows"]
        key = "gain_over_prior" if all(r.get("gain_over_prior") is not None for r in rows) else "score"
    else:
        raise DataError(f"report kind {kind!r} carries no scores")
    return {row["model_id"]: float(row[key]) for row in doc["rows"]}
