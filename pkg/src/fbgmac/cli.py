"""Command-line front end: ``fbgmac {region,simulate,sweep,verify}``.

Settings come from three layers, later ones winning: a named preset
(``preset = fig8``), a ``key = value`` config file (``--config FILE``, ``#``
starts a comment) and ``key=value`` arguments on the command line.  Every
number written is produced by the library; this module only parses,
validates and dispatches.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
from dataclasses import dataclass

from . import analysis, capacity, verify
from .model import ChannelParams, DomainError
from .presets import get_preset
from .schemes import SCHEMES, SchemeConfig, config_at_fraction

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE = 0, 1, 2

PARAM_KEYS = ("p1", "p2", "sigma1_sq", "sigma2_sq", "q")
FLOAT_KEYS = PARAM_KEYS + ("rho", "r1", "r2", "rate_fraction")
INT_KEYS = ("n", "trials", "master_seed", "rho_grid", "grid3", "workers", "chunk_size")
STR_KEYS = ("preset", "scheme", "kinds", "out")
KNOWN_KEYS = FLOAT_KEYS + INT_KEYS + STR_KEYS
#: keys that ``sweep`` accepts as comma-separated lists
SWEEP_KEYS = PARAM_KEYS + ("rho", "r1", "r2", "rate_fraction", "n")

DEFAULTS = {"trials": "2000", "master_seed": "1", "workers": "1",
            "chunk_size": str(analysis.DEFAULT_CHUNK),
            "rho_grid": str(capacity.DEFAULT_GRID), "grid3": str(capacity.DEFAULT_GRID_3D)}


class UsageError(Exception):
    """Bad command line or configuration; reported with exit code 2."""


# ---------------------------------------------------------------- parsing


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in KNOWN_KEYS:
            raise UsageError(f"unknown key {key!r}")
        out[key] = value
    return out


def _layers(args) -> tuple[dict, dict]:
    """(merged settings, explicitly given settings) for a command."""
    explicit = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                explicit.update(parse_config_text(fh.read(), args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    explicit.update(parse_overrides(args.settings))
    merged = dict(DEFAULTS)
    if "preset" in explicit:
        try:
            preset = get_preset(explicit["preset"])
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        for key in PARAM_KEYS:
            merged[key] = repr(getattr(preset.params, key))
        merged.update(scheme=preset.scheme, rho=repr(preset.rho),
                      rate_fraction=repr(preset.rate_fraction), kinds=",".join(preset.regions))
    merged.update(explicit)
    return merged, explicit


def _number(settings: dict, key: str, kind):
    raw = settings.get(key)
    if raw is None:
        raise UsageError(f"missing required setting {key!r}")
    try:
        value = kind(raw)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise UsageError(f"{key}: value must be finite, got {raw!r}")
    return value


def _params(settings: dict) -> ChannelParams:
    values = {}
    for key in PARAM_KEYS:
        if key in settings:
            values[key] = _number(settings, key, float)
    if "sigma1_sq" not in values:
        raise UsageError("missing required setting 'sigma1_sq' (or give a preset)")
    values.setdefault("p1", 0.0)
    values.setdefault("p2", 0.0)
    try:
        return ChannelParams(**values)
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _positive(settings: dict, key: str) -> int:
    value = _number(settings, key, int)
    if value < 1:
        raise UsageError(f"{key} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """A validated simulate request."""

    scheme_config: SchemeConfig
    trials: int
    master_seed: int
    workers: int
    chunk_size: int


def build_run_config(settings: dict, explicit: dict) -> RunConfig:
    scheme = settings.get("scheme")
    if scheme not in SCHEMES:
        raise UsageError(f"scheme must be one of {', '.join(SCHEMES)}, got {scheme!r}")
    params = _params(settings)
    n = _positive(settings, "n")
    rho = _number(settings, "rho", float) if "rho" in settings else 0.0
    trials = _positive(settings, "trials")
    seed = _number(settings, "master_seed", int)
    if not 0 <= seed < 2 ** 64:
        raise UsageError(f"master_seed must be a 64-bit unsigned integer, got {seed}")
    absolute = any(k in explicit for k in ("r1", "r2"))
    if absolute and "rate_fraction" in explicit:
        raise UsageError("give either r1/r2 or rate_fraction, not both")
    try:
        if absolute:
            r1 = _number(settings, "r1", float) if "r1" in settings else 0.0
            r2 = _number(settings, "r2", float) if "r2" in settings else 0.0
            cfg = SchemeConfig(scheme, params, n, r1, r2, rho)
        elif "rate_fraction" in settings:
            frac = _number(settings, "rate_fraction", float)
            cfg = config_at_fraction(scheme, params, n, frac, rho)
        else:
            raise UsageError("set r1/r2 or rate_fraction")
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(cfg, trials, seed, _positive(settings, "workers"),
                     _positive(settings, "chunk_size"))


# ---------------------------------------------------------------- output


def _write(text: str, path: str | None) -> None:
    if path in (None, "", "-"):
        sys.stdout.write(text)
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------- commands


def cmd_region(settings: dict, explicit: dict) -> int:
    kinds = [k.strip() for k in settings.get("kinds", "").split(",") if k.strip()]
    if not kinds:
        raise UsageError("no region kinds requested: set kinds=... or a preset")
    bad = [k for k in kinds if k not in capacity.REGION_KINDS]
    if bad:
        raise UsageError(f"invalid region kind {bad[0]!r}; choose from "
                         f"{', '.join(capacity.REGION_KINDS)}")
    params = _params(settings)
    rho_grid = _positive(settings, "rho_grid")
    grid3 = _positive(settings, "grid3")
    if rho_grid < 2 or grid3 < 2:
        raise UsageError("grid sizes must be >= 2")
    try:
        regions = capacity.regions_for_preset(params, kinds, rho_grid=rho_grid, grid3=grid3)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    out_dir = settings.get("out", ".")
    prefix = settings.get("preset", "region")
    os.makedirs(out_dir, exist_ok=True)
    for kind in kinds:
        path = os.path.join(out_dir, f"{prefix}_{kind}.csv")
        _write(regions[kind].to_csv(), path)
        print(path)
    return EXIT_OK


def cmd_simulate(settings: dict, explicit: dict) -> int:
    run = build_run_config(settings, explicit)
    batch = analysis.estimate_error_rate(run.scheme_config, run.trials, run.master_seed,
                                         chunk_size=run.chunk_size, workers=run.workers)
    _write(batch.report_csv(), settings.get("out"))
    return EXIT_OK


def cmd_sweep(settings: dict, explicit: dict) -> int:
    axes = [(k, [v.strip() for v in settings[k].split(",")])
            for k in SWEEP_KEYS if k in settings and "," in settings[k]]
    if not axes:
        raise UsageError("sweep needs at least one comma-separated list, e.g. n=20,40,80")
    lines = [analysis.REPORT_HEADER]
    for combo in itertools.product(*(values for _, values in axes)):
        point = dict(settings)
        point.update({k: v for (k, _), v in zip(axes, combo)})
        point_explicit = dict(explicit)
        point_explicit.update({k: v for (k, _), v in zip(axes, combo)})
        run = build_run_config(point, point_explicit)
        batch = analysis.estimate_error_rate(run.scheme_config, run.trials, run.master_seed,
                                             chunk_size=run.chunk_size, workers=run.workers)
        lines.append(batch.report_row())
    _write("\n".join(lines) + "\n", settings.get("out"))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        verify.select(args.only)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    results = verify.run_suite(args.only, args.inject_fault, echo=print)
    failed = [r.name for r in results if not r.passed]
    passed = len(results) - len(failed)
    print(f"{passed}/{len(results)} criteria passed" +
          (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------- entry


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fbgmac", description="Feedback coding for Gaussian MAC wiretap "
                     "channels: capacity regions and Monte Carlo simulation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "region": "write region boundary CSVs",
        "simulate": "Monte Carlo batch report for one configuration",
        "sweep": "batch reports over comma-separated setting lists",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("settings", nargs="*", metavar="key=value",
                       help=f"setting overrides; keys: {', '.join(KNOWN_KEYS)}")
    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--only", help="comma-separated criterion or group names "
                   f"(groups: {', '.join(verify.GROUPS)})")
    p.add_argument("--inject-fault", choices=verify.FAULTS, default=None,
                   help="deliberately break the scheme to check the suite catches it")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "verify":
            return cmd_verify(args)
        settings, explicit = _layers(args)
        handler = {"region": cmd_region, "simulate": cmd_simulate, "sweep": cmd_sweep}
        return handler[args.command](settings, explicit)
    except UsageError as exc:
        print(f"fbgmac: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
