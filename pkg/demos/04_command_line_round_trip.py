"""
The command-line workflow end to end
====================================

Generate a hub on disk, score it, pick an ensemble and evaluate the scores
against the generator's oracle accuracies.  Everything below is what a shell
session would do with the ``sfda`` command.
"""
import json
import tempfile
from pathlib import Path

from sfda.cli import main

work = Path(tempfile.mkdtemp(prefix="sfda-demo-"))
spec = {
    "seed": 7, "n_samples": 1000, "num_classes": 5, "dataset_name": "demo",
    "models": [
        {"model_id": f"net{i}", "dim": 16 + 8 * i, "class_separation": 3.0,
         "within_scatter": 0.6 + 0.35 * i, "label_noise_rate": 0.04 * i}
        for i in range(6)
    ],
}
(work / "spec.json").write_text(json.dumps(spec))

# sfda gen --spec spec.json --out hub
main(["gen", "-q", "--spec", str(work / "spec.json"), "--out", str(work / "hub")])

# sfda rank --manifest hub/manifest.json --out scores.json
manifest = str(work / "hub" / "manifest.json")
main(["rank", "-q", "--manifest", manifest, "--out", str(work / "scores.json"), "--threads", "1"])

# sfda ensemble ... --k 3
main(["ensemble", "-q", "--manifest", manifest, "--out", str(work / "ensemble.json"), "--k", "3"])
print("ensemble:", json.loads((work / "ensemble.json").read_text())["selected_top_k"])

# sfda eval --scores scores.json --ground-truth hub/oracle.csv --out eval.json
main(["eval", "-q", "--scores", str(work / "scores.json"),
      "--ground-truth", str(work / "hub" / "oracle.csv"), "--out", str(work / "eval.json")])
print((work / "eval.json").read_text())
print("files are in", work)
