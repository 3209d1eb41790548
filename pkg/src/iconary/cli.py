"""Command-line entry point.

Subcommands: serve, eval-guesser, eval-drawer, stats, replay, align,
augment, export-plots. Runs that involve randomness are deterministic
for a fixed --seed.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

from . import schema
from .agents import (
    BaselineDrawer,
    BaselineGuesser,
    augment,
    load_alignment,
    save_alignment,
    train_alignment,
)
from .core import load_icon_library, make_phrase
from .ingest import IngestError, export_corpus, ingest_dataset
from .metrics import (
    EvalConfig,
    dataset_stats,
    eval_drawer,
    replay_eval_guesser,
    stats_table,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not hasattr(args, "func"):
        parser.print_usage()
        return 2
    try:
        return args.func(args)
    except (IngestError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iconary")
    sub = parser.add_subparsers(dest="command")

    # flags win over ICONARY_* environment overrides, which win over defaults
    serve = sub.add_parser("serve", help="run the live game server")
    serve.add_argument("--host", default=os.environ.get("ICONARY_HOST", "127.0.0.1"))
    serve.add_argument("--port", type=int, default=int(os.environ.get("ICONARY_PORT", 8642)),
                       help="HTTP/WebSocket port")
    serve.add_argument("--tcp-port", type=int, default=int(os.environ.get("ICONARY_TCP_PORT", 8643)),
                       help="newline-JSON port")
    serve.add_argument("--icons", default=os.environ.get("ICONARY_ICONS"), help="icon manifest path")
    serve.add_argument("--phrases", default=None, help="file with one phrase per line")
    serve.add_argument("--drawer", choices=("human", "baseline"), default="human")
    serve.add_argument("--guesser", choices=("human", "baseline"), default="human")
    serve.add_argument("--alignment", default=None, help=".align model file")
    serve.add_argument("--data-dir", default=os.environ.get("ICONARY_DATA_DIR"),
                       help="finished-game directory")
    serve.add_argument("--ui-dir", default=os.environ.get("ICONARY_UI_DIR"),
                       help="static frontend directory")
    serve.add_argument("--time-budget", type=float, default=240.0)
    serve.add_argument("--seed", type=int, default=0)
    serve.set_defaults(func=cmd_serve)

    stats = sub.add_parser("stats", help="dataset statistics per split")
    stats.add_argument("--corpus", required=True)
    stats.add_argument("--split", default=None, help="only this split")
    stats.add_argument("--json", action="store_true", help="machine-readable output")
    stats.set_defaults(func=cmd_stats)

    evg = sub.add_parser("eval-guesser", help="replay evaluation of a guesser agent")
    evg.add_argument("--corpus", required=True)
    evg.add_argument("--agent", choices=("baseline",), default="baseline")
    evg.add_argument("--alignment", required=True)
    evg.add_argument("--out", default=None, help="directory for report files")
    evg.add_argument("--ood", action="store_true", help="require an OOV hit for soft wins")
    evg.add_argument("--seed", type=int, default=0)
    evg.set_defaults(func=cmd_eval_guesser)

    evd = sub.add_parser("eval-drawer", help="icon F1 / perplexity of a drawer agent")
    evd.add_argument("--corpus", required=True)
    evd.add_argument("--agent", choices=("baseline",), default="baseline")
    evd.add_argument("--alignment", required=True)
    evd.add_argument("--icons", default=None)
    evd.add_argument("--out", default=None)
    evd.add_argument("--seed", type=int, default=0)
    evd.set_defaults(func=cmd_eval_drawer)

    rep = sub.add_parser("replay", help="print a recorded game as a transcript")
    rep.add_argument("--game", required=True, help="path to a canonical game JSON file")
    rep.add_argument("--icons", default=None)
    rep.set_defaults(func=cmd_replay)

    al = sub.add_parser("align", help="train an icon/word alignment model")
    al.add_argument("--corpus", required=True)
    al.add_argument("--out", required=True)
    al.add_argument("--dim", type=int, default=64)
    al.add_argument("--epochs", type=int, default=10)
    al.add_argument("--negatives", type=int, default=5)
    al.add_argument("--seed", type=int, default=0)
    al.set_defaults(func=cmd_align)

    aug = sub.add_parser("augment", help="generate alignment-guided pseudo games")
    aug.add_argument("--corpus", required=True)
    aug.add_argument("--alignment", required=True)
    aug.add_argument("--out", required=True, help="output JSONL path")
    aug.add_argument("--seed", type=int, default=0)
    aug.set_defaults(func=cmd_augment)

    plots = sub.add_parser("export-plots", help="win-vs-cutoff curves as PNG")
    plots.add_argument("--report", required=True, help="MetricsReport JSON file")
    plots.add_argument("--out", required=True, help="output PNG path")
    plots.set_defaults(func=cmd_export_plots)

    return parser


def _load_phrases(path: str | None):
    if path is None:
        return None
    lines = Path(path).read_text("utf-8").splitlines()
    return [make_phrase(line) for line in lines if line.strip()]


def cmd_serve(args) -> int:
    from .server import GameServer, run_server

    library = load_icon_library(args.icons)
    alignment = load_alignment(args.alignment) if args.alignment else None
    server = GameServer(
        library,
        phrases=_load_phrases(args.phrases),
        alignment=alignment,
        drawer_agent=args.drawer,
        guesser_agent=args.guesser,
        data_dir=args.data_dir,
        time_budget=args.time_budget,
        seed=args.seed,
    )
    print(
        f"serving on http://{args.host}:{args.port} (ws /ws, ui /ui) "
        f"and tcp {args.host}:{args.tcp_port}"
    )
    try:
        asyncio.run(run_server(server, args.host, args.port, args.tcp_port, args.ui_dir))
    except KeyboardInterrupt:
        pass
    return 0


def cmd_stats(args) -> int:
    corpus, report = ingest_dataset(args.corpus)
    stats = dataset_stats(corpus)
    if args.split:
        stats = {k: v for k, v in stats.items() if k == args.split}
        if not stats:
            print(f"error: no games in split {args.split!r}", file=sys.stderr)
            return 1
    if args.json:
        print(json.dumps({k: v.to_dict() for k, v in stats.items()}, indent=2, sort_keys=True))
    else:
        print(report.summary())
        print()
        print(stats_table(stats))
    return 0


def _write_report(report, out_dir: str | None, name: str) -> None:
    print(report.table())
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (out / f"{name}.csv").write_text(report.to_csv(), encoding="utf-8")
        print(f"wrote {out / f'{name}.json'} and {out / f'{name}.csv'}")


def cmd_eval_guesser(args) -> int:
    corpus, _ = ingest_dataset(args.corpus)
    model = load_alignment(args.alignment)
    agent = BaselineGuesser(model)
    config = EvalConfig(ood_mode=args.ood)
    report = replay_eval_guesser(agent, corpus, config)
    _write_report(report, args.out, "eval-guesser")
    return 0


def cmd_eval_drawer(args) -> int:
    corpus, _ = ingest_dataset(args.corpus)
    model = load_alignment(args.alignment)
    library = load_icon_library(args.icons)
    missing = [i for i in model.icons if i not in library]
    if missing:
        # evaluation corpora may use their own icon inventory (synthetic ones do)
        from .core import Icon, IconLibrary

        extra = tuple(Icon(id=i, name=i) for i in missing)
        library = IconLibrary(library.icons + extra, arrow_icon_ids=library.arrow_icon_ids)
    agent = BaselineDrawer(model, library)
    report = eval_drawer(agent, corpus)
    _write_report(report, args.out, "eval-drawer")
    return 0


def cmd_replay(args) -> int:
    record = schema.loads_game(Path(args.game).read_text("utf-8"))
    library = load_icon_library(args.icons)
    from .encoders import describe_drawing

    print(f"game {record.game_id} [{record.split_tag}] outcome={record.outcome.value}")
    print(f"phrase: {record.phrase.text()}")
    for round_ in record.rounds:
        n = round_.drawing.round_index + 1
        ids = [p.icon_id for p in round_.drawing.placements]
        if all(i in library for i in ids):
            desc = describe_drawing(round_.drawing, library)
        else:
            desc = ", ".join(ids)
        print(f"  drawing {n}: {desc}")
        for guess in round_.guesses:
            marks = "".join(
                "+" if ok else "-" for ok in (guess.correctness or [False] * len(guess.words))
            )
            print(f"    guess: {' '.join(guess.words)}  [{marks}]")
    print(f"elapsed: {record.elapsed_seconds:.1f}s")
    return 0


def cmd_align(args) -> int:
    corpus, _ = ingest_dataset(args.corpus)
    model = train_alignment(
        corpus,
        dim=args.dim,
        epochs=args.epochs,
        negatives_per_positive=args.negatives,
        seed=args.seed,
    )
    save_alignment(model, args.out)
    print(f"trained alignment on {len(corpus)} games "
          f"({len(model.words)} words, {len(model.icons)} icons) -> {args.out}")
    return 0


def cmd_augment(args) -> int:
    corpus, _ = ingest_dataset(args.corpus)
    model = load_alignment(args.alignment)
    out = []
    changed = 0
    for i, record in enumerate(corpus):
        result = augment(record, model, seed=args.seed + i)
        if result.changed:
            out.append(result.record)
            changed += 1
    export_corpus(out, args.out)
    print(f"augmented {changed}/{len(corpus)} games -> {args.out}")
    return 0


def cmd_export_plots(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = json.loads(Path(args.report).read_text("utf-8"))
    curves = data.get("curves") or {}
    if not curves:
        print("error: report has no cutoff curves", file=sys.stderr)
        return 1
    cutoffs = sorted(int(k) for k in curves)
    wins = [curves[str(c)][0] for c in cutoffs]
    softs = [curves[str(c)][1] for c in cutoffs]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(cutoffs, wins, marker="o", label="win rate")
    ax.plot(cutoffs, softs, marker="s", linestyle="--", label="soft win rate")
    ax.set_xlabel("cutoff")
    ax.set_ylabel("rate")
    ax.set_ylim(0.0, 1.0)
    ax.set_title(data.get("label", "win rates"))
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
