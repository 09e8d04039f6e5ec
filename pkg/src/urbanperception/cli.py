"""Command line entry point.

    urbanperception [--config cfg.json] [--out DIR] [--seed N] <command> ROOT

Commands: palette, histogram, ks-matrix, segstats, facade-compare,
sentiment, report. Each single-analysis command runs the pipeline with
only that analysis enabled; ``report`` runs whatever the config enables
(all analyses by default).

Exit codes: 0 success, 1 configuration/IO failure, 2 completed with warnings.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .io import ArtifactWriter
from .pipeline import EXIT_FAILURE, EXIT_OK, EXIT_WARNINGS, ConfigError, RunConfig, discover, run
from .sentiment import DIMENSIONS, LexiconSet, demo_lexicon, load_reviews, score_batch

log = logging.getLogger("urbanperception")

COMMANDS = {
    "palette": "palette",
    "histogram": "histogram",
    "ks-matrix": "ks",
    "segstats": "segstat",
    "facade-compare": "facade",
    "sentiment": "sentiment",
    "report": None,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="urbanperception", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, help="k-means seed (overrides config)")
    parser.add_argument("--workers", type=int, help="worker threads for per-image work")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("root", type=Path, help="dataset root (for sentiment, also a .jsonl review file)")
        if name in ("palette", "report"):
            p.add_argument("-k", type=int, help="palette size (default 5)")
            p.add_argument("--top-n", type=int, help="CCS summary length (default 20)")
        if name in ("histogram", "facade-compare", "report"):
            p.add_argument("--bandwidth", type=float, help="KDE bandwidth in hue units (default 4.5)")
        if name in ("segstats", "report"):
            p.add_argument("--threshold", type=float, help="heatmap display threshold (default 0.01)")
        if name in ("facade-compare", "report"):
            p.add_argument("--facade-classes", nargs="+", help="classes kept as facade (default Wall Building)")
        if name in ("sentiment", "report"):
            p.add_argument("--lexicon", type=Path, help="lexicon JSON (default: bundled demo lexicon)")
        if name != "sentiment":
            p.add_argument("--no-white-balance", action="store_true", help="skip Gray World correction")
    return parser


def _make_config(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if args.config else RunConfig().to_dict()
    analysis = COMMANDS[args.command]
    if analysis is not None:
        base["analyses"] = [analysis]
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "k": getattr(args, "k", None),
        "top_n": getattr(args, "top_n", None),
        "bandwidth": getattr(args, "bandwidth", None),
        "heatmap_threshold": getattr(args, "threshold", None),
        "facade_classes": getattr(args, "facade_classes", None),
        "lexicon": str(args.lexicon) if getattr(args, "lexicon", None) else None,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "no_white_balance", False):
        base["white_balance_photos"] = base["white_balance_streetviews"] = False
    return RunConfig.from_dict(base)


def _sentiment_file(path: Path, cfg: RunConfig, out: Path) -> int:
    lex = LexiconSet.load(cfg.lexicon) if cfg.lexicon else demo_lexicon()
    res = score_batch(load_reviews(path), lex, workers=cfg.workers)
    w = ArtifactWriter(out)
    w.write_csv("sentiment/scores.csv", ["id", "quarter", *DIMENSIONS],
                ([rid, q, *s.as_tuple()] for rid, q, s in res.scores))
    w.write_json("sentiment/summary.json", {
        "dimensions": list(DIMENSIONS),
        "quarters": {q: {"reviews": res.quarter_counts[q], "mean": m} for q, m in res.quarter_means.items()},
    })
    for rid, _, s in res.scores:
        print(f"{rid}\t{s}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _make_config(args)
        if args.command == "sentiment" and args.root.is_file():
            return _sentiment_file(args.root, cfg, args.out)
        layout = discover(args.root)
        result = run(layout, cfg, args.out)
    except (ConfigError, FileNotFoundError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE

    for msg in result.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    status = {EXIT_OK: "ok", EXIT_WARNINGS: "ok with warnings", EXIT_FAILURE: "failed"}[result.exit_code]
    print(f"{status}: {len(layout.quarters)} quarter(s), reports in {args.out}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
