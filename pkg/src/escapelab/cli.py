"""Command-line entry point: ``escapelab <command> [--config FILE] ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from .harness import (
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigError,
    check_invariants,
    default_config,
    run,
    validate,
)

# subcommand -> (allowed experiment kinds, default kind)
COMMANDS = {
    "simulate": (("simulate-w", "simulate-y"), "simulate-w"),
    "bdecomp": (("bdecomp",), "bdecomp"),
    "classify": (("classify", "typeA-gauge"), "classify"),
    "kw": (("kw",), "kw"),
    "bound": (("bound-check",), "bound-check"),
}
LIL = {"hitting": "lil-hitting", "lastexit": "lil-hitting", "stable": "lil-stable", "sup": "lil-sup"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment config (defaults to a small built-in one)")
    p.add_argument("--seed", type=int, help="master seed, overrides the config")
    p.add_argument("--out", type=Path, help="output directory (default runs/<experiment>-<seed>)")
    p.add_argument("--force", action="store_true", help="replace an existing output directory")
    p.add_argument("--workers", type=int, help="worker processes, overrides the config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="escapelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name))
    lil = sub.add_parser("lil", help="Brownian and stable LIL experiments")
    lil_sub = lil.add_subparsers(dest="lil_command", required=True)
    for name in LIL:
        _common(lil_sub.add_parser(name))
    chk = sub.add_parser("check", help="run the invariant suite")
    chk.add_argument("--out", type=Path, help="write the results as JSON here")
    return parser


def _raw_config(args, kinds: tuple[str, ...], default_kind: str) -> dict:
    if args.config is not None:
        with open(args.config) as fh:
            raw = yaml.safe_load(fh)
        if not isinstance(raw, dict):
            raise ConfigError(["config: top level must be a mapping"])
    else:
        raw = default_config(default_kind)
    raw.setdefault("experiment", default_kind)
    if raw["experiment"] not in kinds:
        raise ConfigError([f"experiment: {raw['experiment']!r} cannot run under this command "
                           f"(expected one of {list(kinds)})"])
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    return raw


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        results = check_invariants()
        for name, status in results.items():
            print(f"{'PASS' if status == 'ok' else 'FAIL'} {name}" + ("" if status == "ok" else f": {status}"))
        if args.out is not None:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
        return EXIT_OK if all(v == "ok" for v in results.values()) else EXIT_INVARIANT
    try:
        if args.command == "lil":
            kind = LIL[args.lil_command]
            raw = _raw_config(args, (kind,), kind)
            if kind == "lil-hitting":
                opts = raw.setdefault("options", {}) or {}
                raw["options"] = opts
                want = args.lil_command == "lastexit"
                if opts.get("last_exit", want) != want:
                    raise ConfigError([f"options.last_exit: conflicts with `lil {args.lil_command}`"])
                opts["last_exit"] = want
                if want and "brownian" in raw and isinstance(raw["brownian"], dict):
                    raw["brownian"].setdefault("d", 3)
                if want and args.config is None:
                    raw["brownian"] = {"d": 3, "N": 2000}
        else:
            raw = _raw_config(args, *COMMANDS[args.command])
        cfg = validate(raw)
        out = args.out or Path("runs") / f"{cfg.experiment}-{cfg.seed}"
        record = run(cfg, out, force=args.force)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps({"out": str(out), "status": record.status, "flags": record.flags,
                      "digests": record.digests}, indent=2))
    return record.exit_code


if __name__ == "__main__":
    sys.exit(main())
