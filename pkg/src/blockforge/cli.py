"""Command-line front end for the whole pipeline.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Heavyweight
imports (torch) happen inside the commands that need them so that pure
geometry commands stay snappy.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import BlockforgeError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockforge",
                     description="text-driven structured building generation")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic layout dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--max-boxes", type=int, default=32)

    p = sub.add_parser("train", help="train the layout denoiser")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON or key=value training config file")
    p.add_argument("-o", "--out", required=True, help="BFCK checkpoint path")
    p.add_argument("--no-padreal", action="store_true")
    p.add_argument("--no-spatial-encoding", action="store_true")
    p.add_argument("--no-iou-loss", action="store_true")
    p.add_argument("--log", help="JSONL training log path")
    p.add_argument("--figures", help="directory for the loss-curve figure")

    p = sub.add_parser("sample", help="sample layouts from a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--prompt", default="")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--steps", type=int, help="strided sampling step count")

    p = sub.add_parser("expand", help="box layout -> rule layout")
    p.add_argument("--layout", required=True, help="JSONL layout file")
    p.add_argument("--prompt", help="override the layout's stored prompt")
    p.add_argument("--oracle-url", help="style oracle base URL")
    p.add_argument("--index", type=int, default=0,
                   help="record index within the JSONL file")
    p.add_argument("--world-scale", type=float, default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("build", help="rule layout -> OBJ mesh")
    p.add_argument("--rule", required=True)
    p.add_argument("-o", "--obj", required=True)
    p.add_argument("--manifest", help="sidecar manifest JSON path")
    p.add_argument("--align", action="store_true",
                   help="snap sibling windows and wall depths")

    p = sub.add_parser("eval", help="compare generated vs reference layouts")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="report JSON path")
    p.add_argument("--figures", help="directory for figures + CSV")
    p.add_argument("--dump-rasters", help="directory for per-layout PNGs")
    p.add_argument("--subset", type=int, default=100)
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("serve", help="run the HTTP service and editor UI")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("BLOCKFORGE_PORT", "8000")))
    p.add_argument("--model", help="BFCK checkpoint (omit for PCG-only mode)")
    p.add_argument("--ui-dir", help="static UI bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    return parser


def _load_train_config(path: str | None, args) -> "TrainConfig":
    from .diffusion.training import TrainConfig

    data = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            data = json.loads(text)
        else:
            for line_no, line in enumerate(text.splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise BlockforgeError(
                        f"{path}:{line_no}: expected key=value")
                key, value = (part.strip() for part in line.split("=", 1))
                data[key] = json.loads(value) if value[0] in "[{\"" else (
                    value.lower() == "true" if value.lower() in ("true", "false")
                    else float(value) if "." in value or "e" in value.lower()
                    else int(value))
    cfg = TrainConfig.from_dict(data)
    if args.no_padreal:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "padreal": False})
    if args.no_spatial_encoding:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "spatial_encoding": False})
    if args.no_iou_loss:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "iou_loss": False})
    return cfg


def cmd_synth(args) -> int:
    from .synth import SynthConfig, synth_dataset

    synth_dataset(SynthConfig(count=args.n, seed=args.seed,
                              max_boxes=args.max_boxes), path=args.out)
    print(f"wrote {args.n} layouts to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .diffusion.checkpoint import save_model
    from .diffusion.training import train
    from .layout import load_jsonl

    cfg = _load_train_config(args.config, args)
    dataset = load_jsonl(args.data)
    model, sched, log = train(dataset, cfg, log_path=args.log)
    save_model(args.out, model, cfg)
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        from .figures import save_loss_curve

        save_loss_curve(log, os.path.join(args.figures, "loss_curve.png"))
    print(f"trained {cfg.epochs} steps; checkpoint at {args.out}; "
          f"final noise_term {log[-1]['noise_term']:.4f}")
    return 0


def cmd_sample(args) -> int:
    import torch

    from .diffusion.checkpoint import load_model
    from .diffusion.sampling import sample
    from .layout import save_jsonl

    model, cfg = load_model(args.model)
    rng = torch.Generator().manual_seed(args.seed)
    layouts = sample(model, _sched_for(cfg), args.prompt, args.n, rng,
                     max_boxes=cfg.N, steps=args.steps)
    save_jsonl(layouts, args.out)
    print(f"sampled {args.n} layouts to {args.out}")
    return 0


def _sched_for(cfg):
    from .diffusion.schedule import make_linear_schedule

    return make_linear_schedule(cfg.T)


def cmd_expand(args) -> int:
    from .layout import load_jsonl
    from .rules import (
        DEFAULT_WORLD_SCALE,
        expand_to_rules,
        get_style_oracle,
        infer_attachments,
        resolve_styles,
        rule_layout_to_json,
    )

    layouts = load_jsonl(args.layout)
    if not layouts:
        raise BlockforgeError(f"{args.layout}: no layout records")
    if not 0 <= args.index < len(layouts):
        raise BlockforgeError(
            f"--index {args.index} out of range (file has {len(layouts)})")
    layout = layouts[args.index]
    prompt = args.prompt if args.prompt is not None else layout.prompt
    world_scale = args.world_scale or DEFAULT_WORLD_SCALE
    rules = infer_attachments(expand_to_rules(layout, world_scale=world_scale))
    rules, warnings = resolve_styles(rules, prompt,
                                     get_style_oracle(args.oracle_url))
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(rule_layout_to_json(rules))
        fh.write("\n")
    print(f"expanded {len(rules.components)} components to {args.out}")
    return 0


def cmd_build(args) -> int:
    from .pcg.assemble import align_siblings, assemble
    from .pcg.objio import export_obj, manifest_json
    from .rules import validate_rule_layout

    with open(args.rule, "rb") as fh:
        document = fh.read()
    rules, errors = validate_rule_layout(document)
    if rules is None:
        raise BlockforgeError(
            f"{args.rule}: invalid rule layout:\n  " + "\n  ".join(errors))
    scene = assemble(rules)
    if args.align:
        scene = align_siblings(scene)
    with open(args.obj, "wb") as fh:
        fh.write(export_obj(scene))
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(manifest_json(scene))
            fh.write("\n")
    print(f"built {len(scene.nodes)} components to {args.obj}")
    return 0


def cmd_eval(args) -> int:
    from .evalmetrics import eval_report
    from .layout import load_jsonl

    gen = load_jsonl(args.gen)
    ref = load_jsonl(args.ref)
    report = eval_report(gen, ref, seed=args.seed, subset=args.subset,
                         repeats=args.repeats)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    if args.figures:
        os.makedirs(args.figures, exist_ok=True)
        from .figures import save_metrics_figure, save_raster_grid, save_report_csv

        save_report_csv(report, os.path.join(args.figures, "report.csv"))
        save_raster_grid(gen, ref, os.path.join(args.figures, "raster_grid.png"))
        save_metrics_figure(report, os.path.join(args.figures, "metrics.png"))
    if args.dump_rasters:
        from .figures import dump_rasters

        dump_rasters(gen, args.dump_rasters)
    print(report.to_json())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_path=args.model, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "sample": cmd_sample,
    "expand": cmd_expand,
    "build": cmd_build,
    "eval": cmd_eval,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except (BlockforgeError, OSError, ValueError) as exc:
        print(f"blockforge {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
