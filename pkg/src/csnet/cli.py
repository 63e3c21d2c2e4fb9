"""Command-line driver: ``csnet gen | train | eval | report``.

Every failure prints one ``csnet <command>: error: ...`` line to stderr
and exits nonzero (2 for usage errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import CSNetError, UsageError
from .evaluation import EvalReport, evaluate
from .models import load_checkpoint
from .report import markdown_table, render_svg
from .synthdata import DatasetSpec, SyntheticDataset, generate, read_dataset, write_dataset
from .train import load_config, parse_task, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _size(text: str) -> tuple[int, int]:
    parts = text.lower().replace("x", " ").replace(",", " ").split()
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected H or HxW, got {text!r}")
    return int(parts[0]), int(parts[1])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csnet", description="Stochastic forecasting networks on synthetic multimodal worlds.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic dataset file")
    g.add_argument("--task", required=True, help="trajectory | joints | video")
    g.add_argument("--modes", type=int, default=2)
    g.add_argument("--n", type=int, default=1000, help="number of samples")
    g.add_argument("--nf", type=int, default=1, help="history frames")
    g.add_argument("--h", type=int, default=20, help="horizon (ignored for video)")
    g.add_argument("--size", type=_size, default=(32, 32), help="frame size, H or HxW")
    g.add_argument("--speed", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", default="dataset.csnd")

    t = sub.add_parser("train", help="train a model from a key = value config file")
    t.add_argument("config")
    t.add_argument("--dataset", help="override dataset_path")
    t.add_argument("--checkpoint", help="override checkpoint_path")
    t.add_argument("--log", help="override log_path")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)

    e = sub.add_parser("eval", help="top-k evaluation on the odd-index (test) half of a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--k-max", type=int, default=15)
    e.add_argument("--n-draw", type=int, default=32)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--all", action="store_true", help="evaluate every sample, not just the test half")
    e.add_argument("-o", "--out", default="report.csv")

    r = sub.add_parser("report", help="plot and tabulate one or more eval CSVs")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--labels", help="comma-separated legend labels (default: file stems)")
    r.add_argument("--svg", default="report.svg")
    r.add_argument("--md", help="markdown output path (default: print to stdout)")
    r.add_argument("--title", default="top-k error")
    return p


def cmd_gen(args) -> None:
    spec = DatasetSpec(parse_task(args.task), n_samples=args.n, modes=args.modes, history=args.nf,
                       horizon=args.h, frame_size=args.size, seed=args.seed, speed=args.speed)
    ds = generate(spec)
    write_dataset(ds, args.out)
    print(f"wrote {args.out}: n={len(ds)} M={ds.modes} Nf={ds.history} h={ds.horizon} "
          f"task={ds.task.name.lower()} size={ds.frame_size[0]}x{ds.frame_size[1]}")


def cmd_train(args) -> None:
    cfg = load_config(args.config)
    for attr, value in (("dataset_path", args.dataset), ("checkpoint_path", args.checkpoint),
                        ("log_path", args.log), ("epochs", args.epochs), ("seed", args.seed)):
        if value is not None:
            setattr(cfg, attr, value)
    if not cfg.checkpoint_path:
        cfg.checkpoint_path = str(Path(args.config).with_suffix(".ckpt"))
    if not cfg.log_path:
        cfg.log_path = str(Path(args.config).with_suffix(".log.csv"))
    _, log = train(cfg)
    last = log.rows[-1] if log.rows else {}
    print(f"trained {cfg.scheme.value} for {cfg.epochs} epochs: final loss {last.get('train_loss', float('nan')):.6g}; "
          f"checkpoint {cfg.checkpoint_path}, log {cfg.log_path}")


def check_compatible(model, ds: SyntheticDataset) -> None:
    cfg = model.cfg
    problems = []
    if cfg.task is not ds.task:
        problems.append(f"task {cfg.task.name} vs dataset {ds.task.name}")
    if cfg.frame_size != tuple(ds.frame_size):
        problems.append(f"frame size {cfg.frame_size} vs dataset {tuple(ds.frame_size)}")
    if cfg.history != ds.history:
        problems.append(f"Nf={cfg.history} vs dataset Nf={ds.history}")
    if tuple(cfg.output_shape) != tuple(ds.y_shape):
        problems.append(f"outcome shape {cfg.output_shape} vs dataset {ds.y_shape}")
    if problems:
        raise UsageError("checkpoint does not match dataset: " + "; ".join(problems))


def cmd_eval(args) -> None:
    model = load_checkpoint(args.checkpoint)
    ds = read_dataset(args.dataset)
    check_compatible(model, ds)
    target = ds if args.all else ds.split_parity()[1]
    rep = evaluate(model, target, n_draw=args.n_draw, k_max=args.k_max, seed=args.seed)
    rep.to_csv(args.out)
    top4 = f" top-4 {rep.top(4):.4f}" if args.k_max >= 4 else ""
    print(f"top-1 {rep.top(1):.4f}{top4} (n={rep.n_examples}, n_draw={args.n_draw}) -> {args.out}")


def cmd_report(args) -> None:
    labels = [s.strip() for s in args.labels.split(",")] if args.labels else [Path(p).stem for p in args.inputs]
    if len(labels) != len(args.inputs):
        raise UsageError(f"{len(labels)} labels for {len(args.inputs)} inputs")
    if len(set(labels)) != len(labels):
        raise UsageError("labels must be unique")
    series = {label: EvalReport.from_csv(path) for label, path in zip(labels, args.inputs)}
    Path(args.svg).write_text(render_svg(series, args.title))
    table = markdown_table(series)
    if args.md:
        Path(args.md).write_text(table)
        print(f"wrote {args.svg} and {args.md}")
    else:
        sys.stdout.write(table)


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "report": cmd_report}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    command = next((a for a in argv if a in COMMANDS), None)
    prefix = f"csnet {command}" if command else "csnet"
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{prefix}: error: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (CSNetError, OSError, ValueError) as exc:
        print(f"{prefix}: error: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
