import json
import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sfda import io
from sfda.errors import (
    BadMagic,
    DataError,
    FormatError,
    LabelOutOfRange,
    ManifestError,
    NonFiniteValue,
    TruncatedPayload,
    VersionUnsupported,
)
from sfda.pipeline import TransferScore, score_hub
from sfda.synthetic import SyntheticHubSpec

DATA = Path(__file__).parent / "data"


def feature_bytes(n, d, values, magic=b"SFDAFEAT", version=1):
    return struct.pack("<8sIQQ", magic, version, n, d) + np.asarray(values, dtype="<f4").tobytes()


# --- feature files -----------------------------------------------------------------------


def test_feature_layout_bit_exact(tmp_path):
    p = tmp_path / "x.feat"
    io.write_feature_file(p, np.arange(6.0).reshape(2, 3))
    raw = p.read_bytes()
    assert raw == feature_bytes(2, 3, range(6))
    assert raw[:8] == b"SFDAFEAT" and len(raw) == 28 + 24
    np.testing.assert_array_equal(io.read_feature_file(p), [[0, 1, 2], [3, 4, 5]])
    assert io.read_feature_file(p).dtype == np.float64


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(
        np.float32,
        st.tuples(st.integers(1, 12), st.integers(1, 12)),
        elements=st.floats(width=32, allow_nan=False, allow_infinity=False),
    )
)
def test_feature_round_trip(tmp_path_factory, X):
    p = tmp_path_factory.mktemp("rt") / "x.feat"
    io.write_feature_file(p, X)
    assert np.array_equal(io.read_feature_file(p), X.astype(np.float64))


def test_bad_magic(tmp_path):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(1, 1, [0.0], magic=b"XXXXXXXX"))
    with pytest.raises(BadMagic) as info:
        io.read_feature_file(p)
    assert info.value.offset == 0


def test_version_unsupported(tmp_path):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(1, 1, [0.0], version=2))
    with pytest.raises(VersionUnsupported) as info:
        io.read_feature_file(p)
    assert info.value.offset == 8


@pytest.mark.parametrize("n, d", [(2, 3), (5, 1), (1, 7)])
def test_truncated_payload_offset(tmp_path, n, d):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(n, d, np.zeros(n * d - 1)))
    with pytest.raises(TruncatedPayload) as info:
        io.read_feature_file(p)
    assert info.value.offset == 8 + 4 + 8 + 8 + 4 * (n * d - 1)
    assert str(p) in str(info.value)


def test_truncated_header(tmp_path):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(2, 2, [])[:20])
    with pytest.raises(TruncatedPayload):
        io.read_feature_file(p)


def test_trailing_bytes_rejected(tmp_path):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(1, 2, [1.0, 2.0, 3.0]))
    with pytest.raises(FormatError):
        io.read_feature_file(p)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_offset(tmp_path, bad):
    p = tmp_path / "x.feat"
    p.write_bytes(feature_bytes(2, 2, [0.0, 1.0, bad, 3.0]))
    with pytest.raises(NonFiniteValue) as info:
        io.read_feature_file(p)
    assert info.value.offset == 28 + 4 * 2


def test_writer_rejects_non_finite(tmp_path):
    with pytest.raises(DataError):
        io.write_feature_file(tmp_path / "x.feat", [[np.nan]])


def test_feature_csv_fallback(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("0,1,2\n3,4,5\n\n")
    q = tmp_path / "x.feat"
    io.write_feature_file(q, np.arange(6.0).reshape(2, 3))
    assert np.array_equal(io.read_feature_file(p), io.read_feature_file(q))
    (tmp_path / "ragged.csv").write_text("1,2\n3\n")
    with pytest.raises(FormatError):
        io.read_feature_file(tmp_path / "ragged.csv")
    (tmp_path / "nan.csv").write_text("1,nan\n")
    with pytest.raises(NonFiniteValue):
        io.read_feature_file(tmp_path / "nan.csv")


# --- labels ------------------------------------------------------------------------------


def test_label_layout_bit_exact(tmp_path):
    p = tmp_path / "y.bin"
    io.write_labels(p, [0, 2, 1], 3)
    assert p.read_bytes() == struct.pack("<8sIQI3I", b"SFDALABL", 1, 3, 3, 0, 2, 1)
    y, c = io.read_labels(p)
    assert y.tolist() == [0, 2, 1] and c == 3


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.lists(st.integers(0, 49), min_size=1, max_size=40))
def test_label_round_trip(tmp_path_factory, c, ids):
    y = [v % c for v in ids]
    p = tmp_path_factory.mktemp("lab") / "y.bin"
    io.write_labels(p, y, c)
    got, got_c = io.read_labels(p)
    assert got.tolist() == y and got_c == c


def test_label_out_of_range(tmp_path):
    p = tmp_path / "y.bin"
    p.write_bytes(struct.pack("<8sIQI3I", b"SFDALABL", 1, 3, 2, 0, 1, 2))
    with pytest.raises(LabelOutOfRange) as info:
        io.read_labels(p)
    assert info.value.index == 2
    assert info.value.offset == 24 + 8


def test_label_header_class_count_check(tmp_path):
    p = tmp_path / "y.bin"
    io.write_labels(p, [0, 1], 2)
    with pytest.raises(FormatError):
        io.read_labels(p, num_classes=3)


def test_label_csv_cross_format(tmp_path):
    b = tmp_path / "y.bin"
    io.write_labels(b, [1, 0, 2, 2], 3)
    c = tmp_path / "y.csv"
    c.write_text("1\n0\n2\n2\n")
    yb, cb = io.read_labels(b)
    yc, cc = io.read_labels(c, num_classes=3)
    assert np.array_equal(yb, yc) and cb == cc
    assert io.read_labels(c)[1] == 3
    with pytest.raises(LabelOutOfRange):
        io.read_labels(c, num_classes=2)
    (tmp_path / "neg.csv").write_text("0\n-1\n")
    with pytest.raises(LabelOutOfRange):
        io.read_labels(tmp_path / "neg.csv")


# --- manifests ---------------------------------------------------------------------------


def _write_hub(root):
    rng = np.random.default_rng(0)
    y = np.arange(30) % 3
    io.write_labels(root / "labels.bin", y, 3)
    entries = []
    for mid, d in (("alpha", 4), ("beta", 5)):
        io.write_feature_file(root / f"{mid}.feat", rng.normal(size=(30, d)) + y[:, None])
        entries.append(io.ModelEntry(mid, f"{mid}.feat", d))
    m = io.HubManifest("toy", 3, "labels.bin", tuple(entries))
    io.write_manifest(root / "manifest.json", m)
    return root / "manifest.json"


def test_manifest_round_trip(tmp_path):
    path = _write_hub(tmp_path)
    manifest, hub = io.load_hub(path)
    assert manifest.dataset_name == "toy"
    assert [fs.model_id for fs in hub] == ["alpha", "beta"]
    assert [fs.dim for fs in hub] == [4, 5]
    assert io.read_manifest(path).to_dict() == json.loads(path.read_text())


def test_manifest_declared_dim_mismatch(tmp_path):
    path = _write_hub(tmp_path)
    raw = json.loads(path.read_text())
    raw["models"][1]["feature_dim"] = 6
    path.write_text(json.dumps(raw))
    with pytest.raises(ManifestError, match="beta"):
        io.load_hub(path)


def test_manifest_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(ManifestError):
        io.read_manifest(p)
    p.write_text(json.dumps({"dataset_name": "x", "num_classes": 2, "labels_path": "y", "models": []}))
    with pytest.raises(ManifestError):
        io.read_manifest(p)
    dup = {"model_id": "a", "features_path": "a.feat", "feature_dim": 2}
    p.write_text(
        json.dumps({"dataset_name": "x", "num_classes": 2, "labels_path": "y", "models": [dup, dup]})
    )
    with pytest.raises(ManifestError):
        io.read_manifest(p)
    with pytest.raises(FileNotFoundError):
        io.read_manifest(tmp_path / "absent.json")


def test_missing_feature_file_is_os_error(tmp_path):
    path = _write_hub(tmp_path)
    (tmp_path / "beta.feat").unlink()
    with pytest.raises(OSError):
        io.load_hub(path)


# --- ground truth ------------------------------------------------------------------------


def test_ground_truth_parse(tmp_path):
    p = tmp_path / "gt.csv"
    p.write_text("model_id,accuracy\nResNet-152,97.53\nMNet-A1, 92.59\n")
    assert io.read_ground_truth(p) == {"ResNet-152": 97.53, "MNet-A1": 92.59}
    q = tmp_path / "gt2.csv"
    io.write_ground_truth(q, {"a": 0.1 + 0.2, "b": 50.0})
    assert io.read_ground_truth(q) == {"a": 0.1 + 0.2, "b": 50.0}


@pytest.mark.parametrize(
    "text",
    [
        "model,acc\na,1\n",
        "model_id,accuracy\na,1\na,2\n",
        "model_id,accuracy\na,nan\n",
        "model_id,accuracy\na,x\n",
        "model_id,accuracy\na,1,2\n",
        "model_id,accuracy\n",
    ],
)
def test_ground_truth_rejects(tmp_path, text):
    p = tmp_path / "gt.csv"
    p.write_text(text)
    with pytest.raises(FormatError):
        io.read_ground_truth(p)


# --- reports -----------------------------------------------------------------------------


def _ts(mid, score, lam=0.0, prior=None):
    return TransferScore(mid, score, score + 0.25, score, lam, lam, False, 0, "mean", prior)


HAND_GOLDEN = """{
  "schema_version": 1,
  "kind": "scores",
  "dataset_name": "toy",
  "config": {
    "a": 4.00000000e+00
  },
  "rows": [
    {
      "model_id": "b",
      "score": -5.00000000e-01,
      "gain_over_prior": 6.25000000e-01,
      "stage1_mean_logp": -2.50000000e-01,
      "stage2_mean_logp": -5.00000000e-01,
      "lambda_stage1": 1.83156389e-02,
      "lambda_stage2": 1.83156389e-02,
      "degenerate": false,
      "clamped": 0
    },
    {
      "model_id": "a",
      "score": -1.00000000e+00,
      "gain_over_prior": null,
      "stage1_mean_logp": -7.50000000e-01,
      "stage2_mean_logp": -1.00000000e+00,
      "lambda_stage1": 0.00000000e+00,
      "lambda_stage2": 0.00000000e+00,
      "degenerate": false,
      "clamped": 0
    },
    {
      "model_id": "c",
      "score": -1.00000000e+00,
      "gain_over_prior": null,
      "stage1_mean_logp": -7.50000000e-01,
      "stage2_mean_logp": -1.00000000e+00,
      "lambda_stage1": 0.00000000e+00,
      "lambda_stage2": 0.00000000e+00,
      "degenerate": false,
      "clamped": 0
    }
  ]
}
"""


def test_report_hand_golden():
    scores = [_ts("a", -1.0), _ts("b", -0.5, math.exp(-4), prior=-1.125), _ts("c", -1.0)]
    doc = io.scores_document(scores, "toy", {"a": 4.0})
    assert io.dumps_report(doc) == HAND_GOLDEN


def golden_hub():
    spec = SyntheticHubSpec.from_dict(
        {
            "seed": 7,
            "n_samples": 300,
            "num_classes": 3,
            "n_oracle": 1000,
            "dataset_name": "golden",
            "models": [
                {"model_id": "m_a", "dim": 4, "class_separation": 3.0, "within_scatter": 0.8},
                {"model_id": "m_b", "dim": 6, "class_separation": 3.0, "within_scatter": 1.5,
                 "label_noise_rate": 0.2},
                {"model_id": "m_c", "dim": 5, "class_separation": 3.0, "within_scatter": 1.1,
                 "label_noise_rate": 0.1},
            ],
        }
    )
    from sfda.synthetic import sample_hub

    return sample_hub(spec)


def test_report_golden_file(tmp_path):
    hub, _ = golden_hub()
    doc = io.scores_document(score_hub(hub), "golden", {"a": 4.0})
    out = tmp_path / "r.json"
    io.write_report(doc, out)
    assert out.read_bytes() == (DATA / "golden_scores.json").read_bytes()


def test_report_reserialization_idempotent(tmp_path):
    hub, _ = golden_hub()
    doc = io.scores_document(score_hub(hub), "golden", {"a": 4.0, "standardize": False})
    first = tmp_path / "1.json"
    io.write_report(doc, first)
    parsed = io.read_report(first)
    assert io.dumps_report(parsed) == first.read_text()


def test_report_rows_sorted_stable():
    doc = io.scores_document([_ts("x", -2.0), _ts("y", -1.0), _ts("z", -2.0)], "d")
    assert [r["model_id"] for r in doc["rows"]] == ["y", "x", "z"]


def test_empty_report_raises():
    with pytest.raises(DataError):
        io.scores_document([], "d")


def test_report_scores_kinds():
    doc = io.scores_document([_ts("x", -2.0), _ts("y", -1.0)], "d")
    assert io.report_scores(doc) == {"x": -2.0, "y": -1.0}
    with pytest.raises(DataError):
        io.report_scores({"kind": "evaluation", "rows": []})


def test_report_scores_prefers_gain_over_rounded_score(tmp_path):
    prior = math.log(1 / 3)
    near = [_ts(m, prior + g, prior=prior) for m, g in (("lo", 1e-12), ("hi", 3e-12), ("mid", 2e-12))]
    io.write_report(io.scores_document(near, "d"), tmp_path / "r.json")
    doc = io.read_report(tmp_path / "r.json")
    assert len({row["score"] for row in doc["rows"]}) == 1
    got = io.report_scores(doc)
    assert sorted(got, key=got.get) == ["lo", "mid", "hi"]
    # without a baseline on every row the raw score is used
    doc["rows"][0]["gain_over_prior"] = None
    assert set(io.report_scores(doc).values()) == {doc["rows"][1]["score"]}


def test_read_report_rejects(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("[1, 2]")
    with pytest.raises(FormatError):
        io.read_report(p)
    p.write_text('{"schema_version": 99}')
    with pytest.raises(FormatError):
        io.read_report(p)
