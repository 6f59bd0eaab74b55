"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Defaults on the
segment/eval commands mirror SearchConfig so CLI runs are bit-identical to
library calls with default arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluation import (
    AblationGrid,
    AblationSetup,
    EvalCase,
    benchmark_strategies,
    dice,
    prompt_variance,
    run_ablation,
)
from .network import NetworkSpec, load_weights, save_weights
from .phantom import PhantomConfig, generate_phantom_set
from .search import SearchConfig, SpiralParams, segment
from .serialization import load_mask, load_volume, save_mask, save_volume
from .training import (
    CropDataset,
    TrainConfig,
    WeakDataset,
    sample_training_crops,
    train_fsc,
    train_wsc,
)

DEFAULTS = SearchConfig()


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_triple(text: str, name: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{name} must be three comma-separated ints")
    return tuple(int(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="promptseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("phantom", help="synthetic data")
    gen_sub = p_gen.add_subparsers(dest="phantom_command", required=True)
    g = gen_sub.add_parser("gen", help="generate a phantom dataset")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--lesion-frac", type=float, default=0.5)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dims", type=lambda s: tuple(int(v) for v in s.split(",")),
                   default=(64, 64, 24, 2), help="W,H,D,C")

    p_train = sub.add_parser("train", help="train a classifier")
    train_sub = p_train.add_subparsers(dest="train_command", required=True)
    for kind in ("wsc", "fsc"):
        t = train_sub.add_parser(kind)
        t.add_argument("--data", type=Path, required=True, help="phantom dataset directory")
        t.add_argument("--out", type=Path, required=True, help="weights manifest path")
        t.add_argument("--epochs", type=int, default=60 if kind == "wsc" else 120)
        t.add_argument("--lr", type=float, default=1e-3)
        t.add_argument("--batch-size", type=int, default=4 if kind == "wsc" else 16)
        t.add_argument("--seed", type=int, default=0)
        t.add_argument("--metrics-csv", type=Path, default=None)
        if kind == "fsc":
            t.add_argument("--crop", type=lambda s: _parse_triple(s, "--crop"),
                           default=DEFAULTS.crop_size)
            t.add_argument("--crops-per-volume", type=int, default=16)
            t.add_argument("--balance", type=float, default=0.5)
            t.add_argument("--min-overlap", type=float, default=0.0)

    s = sub.add_parser("segment", help="segment a volume from prompt points")
    s.add_argument("--volume", type=Path, required=True)
    s.add_argument("--wsc", type=Path, required=True)
    s.add_argument("--fsc", type=Path, required=True)
    s.add_argument("--prompt", action="append", required=True,
                   type=lambda v: _parse_triple(v, "--prompt"), help="w,h,d (repeatable)")
    s.add_argument("--out", type=Path, required=True, help="output mask header path")
    _add_search_args(s)

    e = sub.add_parser("eval", help="evaluation utilities")
    eval_sub = e.add_subparsers(dest="eval_command", required=True)

    ed = eval_sub.add_parser("dice")
    ed.add_argument("--pred", type=Path, required=True)
    ed.add_argument("--gt", type=Path, required=True)

    ev = eval_sub.add_parser("variance")
    ev.add_argument("--volume", type=Path, required=True)
    ev.add_argument("--gt", type=Path, required=True)
    ev.add_argument("--wsc", type=Path, required=True)
    ev.add_argument("--fsc", type=Path, required=True)
    ev.add_argument("--prompts", type=int, default=8)
    _add_search_args(ev)

    es = eval_sub.add_parser("strategies")
    es.add_argument("--data", type=Path, required=True, help="phantom dataset directory")
    es.add_argument("--wsc", type=Path, required=True)
    es.add_argument("--fsc", type=Path, required=True)
    es.add_argument("--out", type=Path, required=True, help="output CSV")
    _add_search_args(es)

    ea = eval_sub.add_parser("ablate")
    ea.add_argument("--axis", required=True)
    ea.add_argument("--values", required=True,
                    help="comma-separated values, e.g. 0.01,0.05,0.1 or 8x8x6,10x10x6")
    ea.add_argument("--out-dir", type=Path, required=True)
    ea.add_argument("--seed", type=int, default=0)
    ea.add_argument("--eval-cases", type=int, default=10)
    ea.add_argument("--wsc-samples", type=int, default=8)
    ea.add_argument("--fsc-samples", type=int, default=24)
    ea.add_argument("--wsc-epochs", type=int, default=60)
    ea.add_argument("--fsc-epochs", type=int, default=120)

    v = sub.add_parser("serve", help="run the HTTP service")
    v.add_argument("--port", type=int, default=8000)
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--data-dir", type=Path, required=True)
    v.add_argument("--wsc", type=Path, default=None)
    v.add_argument("--fsc", type=Path, default=None)
    v.add_argument("--frontend", type=Path, default=None,
                   help="directory with the built viewer (optional)")
    return parser


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=DEFAULTS.tau)
    p.add_argument("--alpha", type=float, default=DEFAULTS.alpha)
    p.add_argument("--n", type=int, default=DEFAULTS.n_runs, dest="n_runs")
    p.add_argument("--T", type=int, default=DEFAULTS.spiral.T, dest="T")
    p.add_argument("--mu", type=int, default=DEFAULTS.spiral.mu)
    p.add_argument("--crop", type=lambda v: _parse_triple(v, "--crop"),
                   default=DEFAULTS.crop_size)
    p.add_argument("--strategy", choices=("spiral", "sliding_window", "random"),
                   default=DEFAULTS.strategy)
    p.add_argument("--seed", type=int, default=DEFAULTS.seed)


def _search_config(args: argparse.Namespace) -> SearchConfig:
    spiral = SpiralParams(s=args.T / DEFAULTS.spiral.max_radius, mu=args.mu, T=args.T)
    return SearchConfig(crop_size=args.crop, alpha=args.alpha, tau=args.tau,
                        spiral=spiral, n_runs=args.n_runs, strategy=args.strategy,
                        seed=args.seed)


def _load_dataset_dir(data_dir: Path):
    """Read a phantom dataset directory: volumes, gt masks, weak labels."""
    labels_path = data_dir / "labels.csv"
    if not labels_path.exists():
        raise FileNotFoundError(f"no labels.csv in {data_dir}")
    entries = []
    with labels_path.open() as fh:
        for row in csv.DictReader(fh):
            vol = load_volume(data_dir / f"{row['id']}.json")
            gt_path = data_dir / f"{row['id']}_gt.json"
            gt = load_mask(gt_path) if gt_path.exists() else None
            entries.append((vol, gt, int(row["weak_label"])))
    return entries


def cmd_phantom_gen(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    config = PhantomConfig(dims=tuple(args.dims))
    phantoms = generate_phantom_set(config, args.count, args.lesion_frac, seed=args.seed)
    with (args.out / "labels.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "weak_label"])
        for i, ph in enumerate(phantoms):
            vol_id = f"vol_{i:03d}"
            vol = replace(ph.volume, id=vol_id)
            save_volume(vol, args.out / f"{vol_id}.json")
            save_mask(ph.mask, args.out / f"{vol_id}_gt.json")
            writer.writerow([vol_id, ph.weak_label])
    print(f"wrote {len(phantoms)} phantoms to {args.out}")
    return 0


def cmd_train(args) -> int:
    entries = _load_dataset_dir(args.data)
    in_channels = entries[0][0].dims[3]
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=args.seed)
    if args.train_command == "wsc":
        data = WeakDataset(items=[(vol, label) for vol, _, label in entries])
        net = train_wsc(data, NetworkSpec(in_channels=in_channels), cfg,
                        metrics_csv=args.metrics_csv)
    else:
        items = []
        for i, (vol, gt, _) in enumerate(entries):
            if gt is None:
                raise ValueError(f"volume {vol.id} has no ground-truth mask")
            ds = sample_training_crops(vol, gt, args.crop, args.crops_per_volume,
                                       balance=args.balance,
                                       min_overlap_fraction=args.min_overlap,
                                       seed=args.seed + i)
            items.extend(ds.items)
        spec = NetworkSpec(in_channels=in_channels, head="flatten", input_size=args.crop)
        net = train_fsc(CropDataset(items=items), spec, cfg, metrics_csv=args.metrics_csv)
    save_weights(net, args.out)
    print(f"wrote weights to {args.out}")
    return 0


def cmd_segment(args) -> int:
    volume = load_volume(args.volume)
    wsc = load_weights(args.wsc, expect_head="global_average_pool")
    fsc = load_weights(args.fsc, expect_head="flatten")
    config = _search_config(args)
    mask, diag = segment(volume, args.prompt, config, wsc, fsc)
    save_mask(mask, args.out)
    print(json.dumps({
        "out": str(args.out),
        "positive_voxels": mask.voxel_count(),
        "crops_evaluated": diag.crops_evaluated,
        "runtime_s": round(diag.runtime_s, 3),
    }))
    return 0


def cmd_eval(args) -> int:
    if args.eval_command == "dice":
        print(f"{dice(load_mask(args.pred), load_mask(args.gt)):.6f}")
        return 0
    if args.eval_command == "variance":
        volume = load_volume(args.volume)
        gt = load_mask(args.gt)
        wsc = load_weights(args.wsc, expect_head="global_average_pool")
        fsc = load_weights(args.fsc, expect_head="flatten")
        mean, std = prompt_variance(volume, gt, _search_config(args), wsc, fsc,
                                    num_prompts=args.prompts, seed=args.seed)
        print(json.dumps({"mean_dice": round(mean, 6), "std_dice": round(std, 6)}))
        return 0
    if args.eval_command == "strategies":
        entries = _load_dataset_dir(args.data)
        cases = []
        for vol, gt, _ in entries:
            if gt is None or gt.voxel_count() == 0:
                continue
            centroid = tuple(int(round(v)) for v in np.argwhere(gt.data > 0).mean(axis=0))
            cases.append(EvalCase(volume=vol, gt=gt, prompt=centroid))
        if not cases:
            raise ValueError("dataset has no lesion-bearing volumes to benchmark")
        wsc = load_weights(args.wsc, expect_head="global_average_pool")
        fsc = load_weights(args.fsc, expect_head="flatten")
        results = benchmark_strategies(cases, _search_config(args), (wsc, fsc),
                                       csv_path=args.out)
        for r in results:
            print(f"{r.strategy}: dice={r.mean_dice:.4f} time={r.mean_time_s:.2f}s "
                  f"crops={r.mean_crops:.0f}")
        return 0
    if args.eval_command == "ablate":
        values = []
        for raw in args.values.split(","):
            values.append(tuple(int(v) for v in raw.split("x")) if "x" in raw else _auto(raw))
        grid = AblationGrid(axis=args.axis, values=tuple(values))
        setup = AblationSetup(eval_cases=args.eval_cases, wsc_samples=args.wsc_samples,
                              fsc_samples=args.fsc_samples, wsc_epochs=args.wsc_epochs,
                              fsc_epochs=args.fsc_epochs)
        report = run_ablation(grid, SearchConfig(), setup, seed=args.seed,
                              out_dir=args.out_dir)
        print(f"wrote {report.csv_path} and {report.json_path}")
        return 0
    raise ValueError(f"unknown eval command {args.eval_command!r}")


def _auto(raw: str):
    try:
        return int(raw)
    except ValueError:
        return float(raw)


def cmd_serve(args) -> int:
    import uvicorn

    from .server import SessionState, create_app

    state = SessionState.from_data_dir(args.data_dir, wsc_path=args.wsc, fsc_path=args.fsc)
    app = create_app(state, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cli_dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "phantom":
            return cmd_phantom_gen(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "segment":
            return cmd_segment(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "serve":
            return cmd_serve(args)
        raise ValueError(f"unknown command {args.command!r}")
    except KeyboardInterrupt:
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
