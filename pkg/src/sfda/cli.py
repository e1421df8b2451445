"""Command-line front end.

Exit codes: 0 success, 2 file-system error, 3 invalid input data or file
content, 4 unexpected internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import io, metrics
from .ensemble import DEFAULT_N_ENS, select_ensemble
from .errors import IdMismatch, SfdaError
from .fda import LAMBDA_VARIANTS
from .pipeline import score_hub
from .synthetic import SyntheticHubSpec, generate_synthetic_hub

log = logging.getLogger("sfda")

EXIT_OK, EXIT_IO, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


def _default_threads():
    env = os.environ.get("SFDA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _score_options(p):
    p.add_argument("--manifest", required=True, help="hub manifest (JSON)")
    p.add_argument("--a", type=float, default=4.0, help="shrinkage sharpness (default 4)")
    p.add_argument("--lambda-variant", choices=LAMBDA_VARIANTS, default="main_text")
    p.add_argument("--power-steps", type=int, default=3)
    p.add_argument("--standardize", action="store_true", help="z-score each feature dimension first")
    p.add_argument("--threads", type=int, default=None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="suppress timing logs")
    parser = argparse.ArgumentParser(prog="sfda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="score every model of a hub")
    _score_options(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rank", parents=[common], help="print models by descending score")
    _score_options(p)
    p.add_argument("--out", help="also write the scores report here")

    p = sub.add_parser("ensemble", parents=[common], help="select a top-k ensemble")
    _score_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--n-ens", type=int, default=DEFAULT_N_ENS)
    p.add_argument("--no-normalize-ensemble", action="store_true")

    p = sub.add_parser("eval", parents=[common], help="compare a scores report with ground truth")
    p.add_argument("--scores", required=True, help="scores or ensemble report (JSON)")
    p.add_argument("--ground-truth", required=True, help="CSV with header model_id,accuracy")
    p.add_argument("--out", required=True)
    p.add_argument("--rel-k", type=int, nargs="+", default=[1, 3])

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic hub")
    p.add_argument("--spec", required=True, help="hub spec (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _score_kwargs(args):
    return dict(
        lambda_variant=args.lambda_variant,
        power_steps=args.power_steps,
        standardize=args.standardize,
    )


def _config(args):
    return {
        "a": args.a,
        "lambda_variant": args.lambda_variant,
        "power_steps": args.power_steps,
        "standardize": args.standardize,
    }


def _threads(args):
    return args.threads if args.threads else _default_threads()


def cmd_score(args):
    manifest, hub = io.load_hub(args.manifest)
    scores = score_hub(hub, args.a, threads=_threads(args), **_score_kwargs(args))
    doc = io.scores_document(scores, manifest.dataset_name, _config(args))
    io.write_report(doc, args.out)
    return doc


def cmd_rank(args):
    manifest, hub = io.load_hub(args.manifest)
    scores = score_hub(hub, args.a, threads=_threads(args), **_score_kwargs(args))
    doc = io.scores_document(scores, manifest.dataset_name, _config(args))
    for i, row in enumerate(doc["rows"], 1):
        gain = row["gain_over_prior"]
        gain = "" if gain is None else f"\t{gain:.8e}"
        print(f"{i}\t{row['model_id']}\t{row['score']:.8e}{gain}")
    if args.out:
        io.write_report(doc, args.out)
    return doc


def cmd_ensemble(args):
    manifest, hub = io.load_hub(args.manifest)
    report = select_ensemble(
        hub,
        args.a,
        k=args.k,
        r=args.r,
        n_ens=args.n_ens,
        normalize=not args.no_normalize_ensemble,
        threads=_threads(args),
        **_score_kwargs(args),
    )
    doc = io.ensemble_document(report, manifest.dataset_name, _config(args))
    io.write_report(doc, args.out)
    return doc


def cmd_eval(args):
    doc = io.read_report(args.scores)
    scores = io.report_scores(doc)
    truth = io.read_ground_truth(args.ground_truth)
    if set(scores) != set(truth):
        raise IdMismatch(set(truth) - set(scores), set(scores) - set(truth))
    ids = list(scores)
    evaluation = metrics.evaluate(
        [scores[m] for m in ids], [truth[m] for m in ids], ks=tuple(args.rel_k)
    )
    out = io.evaluation_document(evaluation, scores, truth, doc.get("dataset_name", ""))
    io.write_report(out, args.out)
    return out


def cmd_gen(args):
    with open(args.spec) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as exc:
            raise io.FormatError(f"invalid JSON: {exc}", args.spec) from None
    spec = SyntheticHubSpec.from_dict(raw)
    manifest_path, oracle = generate_synthetic_hub(spec, args.out)
    for mid, acc in oracle.items():
        print(f"{mid}\t{acc:.4f}")
    return manifest_path


COMMANDS = {
    "score": cmd_score,
    "rank": cmd_rank,
    "ensemble": cmd_ensemble,
    "eval": cmd_eval,
    "gen": cmd_gen,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except OSError as exc:
        print(f"sfda: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SfdaError as exc:
        print(f"sfda: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"sfda: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
