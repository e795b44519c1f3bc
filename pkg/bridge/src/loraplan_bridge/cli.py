"""Bridge command line: export descriptors, attach adapters, emit reports."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .attach import attach_adapters, smoke_train
from .export import BridgeError, export_descriptor, load_model


@dataclass(frozen=True)
class BridgeConfig:
    model_path: str
    device: str = "cpu"


def cmd_export(args: argparse.Namespace) -> int:
    config = BridgeConfig(model_path=args.model, device=args.device)
    try:
        model = load_model(config.model_path, config.device)
        doc = export_descriptor(model, model_name=args.name)
    except BridgeError as exc:
        print(f"loraplan-bridge export: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_attach(args: argparse.Namespace) -> int:
    config = BridgeConfig(model_path=args.model, device=args.device)
    try:
        target_list = json.loads(Path(args.targets).read_text(encoding="utf-8"))
        model = load_model(config.model_path, config.device)
        report = attach_adapters(model, target_list)
        if args.smoke_train:
            losses = smoke_train(model)
            print(
                "smoke-train ok: adapter-only gradients over "
                f"{len(losses)} steps, losses {[round(x, 3) for x in losses]}",
                file=sys.stderr,
            )
    except (BridgeError, OSError, json.JSONDecodeError) as exc:
        print(f"loraplan-bridge attach: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="loraplan-bridge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="export a checkpoint's descriptor document")
    p.add_argument("--model", required=True, help="local checkpoint directory")
    p.add_argument("--name", default=None, help="model name to record")
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("attach", help="attach adapters per a target list and report")
    p.add_argument("--model", required=True)
    p.add_argument("--targets", required=True, help="target list JSON from the planner")
    p.add_argument("--device", default="cpu")
    p.add_argument("--report", default=None, help="where to write the attachment report")
    p.add_argument(
        "--smoke-train",
        action="store_true",
        help="run a few steps to confirm gradients flow only through adapters",
    )
    p.set_defaults(func=cmd_attach)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
