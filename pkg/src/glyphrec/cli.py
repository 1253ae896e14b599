"""Command line interface: ``glyphrec <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import GlyphError
from .features import KINDS
from .harness import featio
from .harness.dataset import ingest, write_manifest
from .harness.pipeline import (CLASSIFIERS, FUSION_RULES, KERNELS, Bundle, Corpus, PipelineConfig,
                               compute_features, evaluate_bundle, load_corpus, run_pipeline)
from .harness.report import EvalReport, render
from .harness.synth import synth_glyphs, write_dataset
from .imagecore import read_image

log = logging.getLogger("glyphrec")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig.from_dict()
    return cfg.override(seed=args.seed, classifier=args.classifier, fusion=args.fusion,
                        kernel=args.kernel, manifest=getattr(args, "data", None),
                        jobs=getattr(args, "jobs", None))


def _corpus_from(source) -> Corpus:
    man = ingest(source, check_images=False)
    return Corpus([e.path for e in man.entries], man.labels,
                  [read_image(man.resolve(e)) for e in man.entries])


def cmd_ingest(args):
    man = ingest(args.source, check_images=not args.no_check)
    counts = np.bincount(man.labels, minlength=49)
    print(f"{len(man)} images, {int((counts > 0).sum())} classes")
    if args.out:
        write_manifest(man, args.out)
        print(f"manifest written to {args.out}")
    return 0


def cmd_synth(args):
    seed = 0 if args.seed is None else args.seed
    ds = synth_glyphs(args.classes, args.per_class, args.noise, seed)
    path = write_dataset(ds, args.out)
    print(f"{len(ds)} glyphs written, manifest {path}")
    return 0


def cmd_extract(args):
    corpus = _corpus_from(args.data)
    feats = compute_features(corpus.gray, args.clean, args.jobs)
    out = Path(args.out)
    for k in KINDS:
        featio.write_features(out / f"{k.value}.tsv", k.value, corpus.ids, corpus.labels, feats[k])
    print(f"features for {len(corpus.ids)} images written to {out}")
    return 0


def cmd_train(args):
    cfg = _config(args)
    out = Path(args.out or cfg["output"])
    result = run_pipeline(cfg, out)
    print(render(result.report, "text"))
    print(f"models and reports written to {out}")
    return 0


def cmd_evaluate(args):
    bundle = Bundle.load(args.models)
    report = evaluate_bundle(bundle, _corpus_from(args.data), args.jobs or 1)
    if args.out:
        Path(args.out).write_text(report.to_json())
    print(render(report, args.format, timings=False), end="")
    return 0


def cmd_predict(args):
    bundle = Bundle.load(args.models)
    classifier = args.classifier or "mlp-ensemble"
    if classifier == "all":
        classifier = "mlp-ensemble"
    for path in args.images:
        res = bundle.classify(read_image(path), classifier, args.fusion)
        res["image"] = str(path)
        print(json.dumps(res, sort_keys=True))
    return 0


def cmd_report(args):
    src = Path(args.report)
    path = src / "report.json" if src.is_dir() else src
    timings = path.with_name("timings.json")
    tim_text = timings.read_text() if args.timings and timings.exists() else None
    report = EvalReport.from_json(path.read_text(), tim_text)
    print(render(report, args.format, timings=args.timings), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--config", help="JSON pipeline config")
    common.add_argument("--classifier", choices=CLASSIFIERS)
    common.add_argument("--fusion", choices=FUSION_RULES)
    common.add_argument("--kernel", choices=KERNELS)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="glyphrec", parents=[common],
                                description="Handwritten glyph recognition toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="validate a dataset, write a manifest")
    s.add_argument("source", help="class-per-folder directory or manifest CSV")
    s.add_argument("--out", help="manifest CSV to write")
    s.add_argument("--no-check", action="store_true", help="skip decoding every image")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic glyph corpus")
    s.add_argument("--classes", type=int, default=10)
    s.add_argument("--per-class", type=int, default=70)
    s.add_argument("--noise", type=float, default=0.02)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", parents=[common], help="write feature matrices")
    s.add_argument("--data", required=True, help="directory or manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--clean", action="store_true", help="remove isolated pixels first")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_extract)

    for name, hlp in (("train", "train, evaluate and save all models"),
                      ("run", "alias of train")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--data", help="directory or manifest (default: synthetic corpus)")
        s.add_argument("--out", help="output directory (default: config 'output')")
        s.add_argument("--jobs", type=int)
        s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="score saved models on a dataset")
    s.add_argument("--models", required=True, help="output directory of a train run")
    s.add_argument("--data", required=True)
    s.add_argument("--format", choices=("text", "rows"), default="text")
    s.add_argument("--out", help="write the report JSON here")
    s.add_argument("--jobs", type=int)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("predict", parents=[common], help="classify images")
    s.add_argument("--models", required=True)
    s.add_argument("images", nargs="+")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("report", parents=[common], help="render a saved report")
    s.add_argument("report", help="run directory or report.json")
    s.add_argument("--format", choices=("text", "rows"), default="text")
    s.add_argument("--timings", action="store_true", help="include wall-clock columns")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GlyphError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
