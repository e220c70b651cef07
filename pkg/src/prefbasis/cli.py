"""Command line front end.

    prefbasis SCENARIO [--config PATH] [--out PATH] [--format json|csv]
                       [--tol FLOAT] [--seed INT] [--grid-deg FLOAT]
                       [--set KEY=VALUE ...]

Parameter precedence: flags > config file > built-in defaults.  A config file
is a JSON object with the optional keys ``scenario``, ``params`` and
``output`` (``{"path": ..., "format": ...}``).  ``--set`` values are parsed
as JSON when possible, otherwise kept as strings.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
(iteration cap hit or an inconclusive residual).
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ConfigError, Inconclusive, NoConvergence
from .report import TOOL, IoFailure, emit_report
from .scenarios import SCENARIOS, resolve_params, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_KEYS = {"scenario", "params", "output"}
_OUTPUT_KEYS = {"path", "format"}


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(item, "--set expects KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a JSON object")
    unknown = sorted(set(cfg) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown config key")
    if not isinstance(cfg.get("params", {}), dict):
        raise ConfigError("params", "must be a JSON object")
    out = cfg.get("output", {})
    if not isinstance(out, dict) or set(out) - _OUTPUT_KEYS:
        raise ConfigError("output", f"must be an object with keys {sorted(_OUTPUT_KEYS)}")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    common.add_argument("--tol", type=float, help="product tolerance")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--grid-deg", type=float, dest="grid_deg", help="Bloch scan resolution (degrees)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one scenario parameter")
    parser = argparse.ArgumentParser(prog=TOOL, description="Preferred-basis measurement scenarios.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve(args) -> tuple[dict, str | None, str]:
    """Merge defaults, config file and flags into (params, out path, format)."""
    cfg = _load_config(args.config)
    if "scenario" in cfg and cfg["scenario"] != args.scenario:
        raise ConfigError("scenario", f"config is for {cfg['scenario']!r}, command is {args.scenario!r}")
    overrides = dict(cfg.get("params", {}))
    overrides.update(_parse_set(args.set))
    for flag in ("tol", "seed", "grid_deg"):
        value = getattr(args, flag)
        if value is not None:
            overrides[flag] = value
    params = resolve_params(args.scenario, overrides)
    out_cfg = cfg.get("output", {})
    path = args.out if args.out is not None else out_cfg.get("path")
    fmt = args.format or out_cfg.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError("format", f"must be json or csv, got {fmt!r}")
    return params, path, fmt


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        params, path, fmt = resolve(args)
        result = run_scenario(args.scenario, params)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoConvergence, Inconclusive) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    doc = {
        "tool": TOOL,
        "version": __version__,
        "scenario": args.scenario,
        "config": {"params": params, "format": fmt},
        "status": result.status,
        "results": result.results,
        "checks": result.checks,
    }
    try:
        text = emit_report(doc, (result.header, result.rows), path, fmt)
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not path:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
