"""Command-line front end.

    revskew validate --config system.json [--tol 1e-10] [--out cert.json]
    revskew certify  --config run.json    [--out report.json] [--csv counts.csv] [--threads N]
    revskew entropy  --config sft.json    [--max-len 12]
    revskew generate KIND [--k K] [--eps E] [--lam L] [--alphabet N] [--seed S] [--out system.json]
    revskew scan     --kind drifting --param eps --values 0.02,0.05 [--out scan.csv]

Exit codes: 0 ok, 1 not verified, 2 inconclusive or empty subshift,
3 not reversible, 64 usage, schema or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, fields
from importlib.resources import files
from pathlib import Path

from .entropy_cert import CASE1, CASE2, certify
from .errors import EmptySubshift, InvalidParams, NotReversible
from .skewprod import make_model_family, system_from_json, system_to_json, validate_reversible
from .symbolic import block_counts, sft_entropy, sft_from_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_NOT_REVERSIBLE = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    system: object
    t: float = 0.5
    depth: int = 40
    delta: float = 0.5
    max_support: int = 6
    max_len: int = 30
    exhaustive_depth: int = 12
    budget: int = 10**6
    tol: float = 1e-10
    threads: int = 1
    seed: int = 0
    out: str | None = None
    csv: str | None = None

    # name -> (low, high), both inclusive
    RANGES = {
        "t": (1e-9, 1.0),
        "depth": (1, 10_000),
        "delta": (1e-12, 2.0),
        "max_support": (1, 12),
        "max_len": (1, 62),
        "exhaustive_depth": (1, 14),
        "budget": (1, 10**8),
        "tol": (1e-15, 1e-2),
        "threads": (1, 256),
        "seed": (0, 2**63 - 1),
    }

    def __post_init__(self):
        for name, (lo, hi) in self.RANGES.items():
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise UsageError(f"{name} must be a number, got {v!r}")
            if isinstance(self.__dataclass_fields__[name].default, int) and int(v) != v:
                raise UsageError(f"{name} must be an integer, got {v!r}")
            if not lo <= v <= hi:
                raise UsageError(f"{name}={v} outside [{lo}, {hi}]")

    def params(self):
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("system", "out", "csv", "seed")}


def load_schema(name: str) -> dict:
    """One of the shipped JSON schemas: fiber, system, certificate, report, entropy."""
    return json.loads(files("revskew").joinpath("schemas", f"{name}.schema.json").read_text())


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from None


def _parse_system(obj, base_dir="."):
    if isinstance(obj, str):
        p = Path(obj)
        obj = _read_json(p if p.is_absolute() else Path(base_dir) / p)
    try:
        return system_from_json(obj)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad system config: {exc}") from None


def load_run_config(path) -> tuple[RunConfig, object]:
    """A bare system config or ``{"system": path-or-object, ...params}``."""
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise UsageError("config must be a JSON object")
    if "table" in obj:
        obj = {"system": obj}
    known = {f.name for f in fields(RunConfig)}
    unknown = set(obj) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "system" not in obj:
        raise UsageError("config needs a 'system' entry")
    cfg = RunConfig(**obj)
    return cfg, _parse_system(cfg.system, Path(path).parent)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


# --- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    system = _parse_system(_read_json(args.config))
    cert = validate_reversible(system, args.tol)
    _emit(_dump(cert.to_json()), args.out)
    if not cert.verified:
        ctx = cert.worst_pair[0]
        print(f"not reversible: worst context {list(ctx)}", file=sys.stderr)
    return EXIT_OK if cert.verified else EXIT_FAIL


def cmd_certify(args) -> int:
    cfg, system = load_run_config(args.config)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.__post_init__()
    out = args.out or cfg.out
    csv_path = args.csv or cfg.csv
    if csv_path is None and out is not None:
        csv_path = str(Path(out).with_suffix(".counts.csv"))
    try:
        report = certify(system, **cfg.params())
    except NotReversible as exc:
        cert = exc.certificate
        _emit(_dump({"case_label": "NotReversible", "certificate": cert.to_json()}), out)
        return EXIT_NOT_REVERSIBLE
    body = report.to_json(system)
    body["budgets"]["seed"] = cfg.seed
    _emit(_dump(body), out)
    if csv_path is not None:
        _emit(report.counts_csv(), csv_path)
    if report.case_label in (CASE1, CASE2):
        return EXIT_OK
    print(f"inconclusive: failed at stage {report.failed_stage}", file=sys.stderr)
    return EXIT_INCONCLUSIVE


def cmd_entropy(args) -> int:
    obj = _read_json(args.config)
    try:
        t = sft_from_json(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad SFT config: {exc}") from None
    try:
        h = sft_entropy(t)
    except EmptySubshift as exc:
        _emit(_dump({"error": "EmptySubshift", "detail": str(exc)}), args.out)
        return EXIT_INCONCLUSIVE
    counts = block_counts(t, args.max_len)
    _emit(_dump({"entropy": h, "counts": counts, "sft": obj}), args.out)
    return EXIT_OK


def _family_params(args):
    params = {}
    for name in ("k", "eps", "lam", "alphabet", "context_half", "depth", "strength"):
        v = getattr(args, name, None)
        if v is not None:
            params[name] = v
    if args.kind == "random":
        params["seed"] = args.seed if args.seed is not None else 0
    return params


def cmd_generate(args) -> int:
    try:
        system = make_model_family(args.kind, **_family_params(args))
    except (InvalidParams, ValueError) as exc:
        raise UsageError(str(exc)) from None
    _emit(_dump(system_to_json(system)), args.out)
    return EXIT_OK


SCAN_COLUMNS = [
    "kind", "param", "value", "case_label", "failed_stage", "certified_lower_bound",
    "entropy_estimate", "drift_hit_index", "scattering_d1", "final_count",
]


def cmd_scan(args) -> int:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --values {args.values!r}") from None
    if args.param == "k":
        if any(int(v) != v for v in values):
            raise UsageError("k values must be integers")
        values = [int(v) for v in values]
    base = {"k": args.k, "eps": args.eps, "lam": args.lam}
    base = {k: v for k, v in base.items() if v is not None and k != args.param}
    cfg = RunConfig(system=None, depth=args.depth, max_len=args.max_len, threads=args.threads or 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for v in values:
        try:
            system = make_model_family(args.kind, **base, **{args.param: v})
        except (InvalidParams, ValueError) as exc:
            raise UsageError(str(exc)) from None
        try:
            r = certify(system, **cfg.params())
            row = [
                r.case_label, r.failed_stage or "", repr(r.certified_lower_bound),
                "" if r.entropy_estimate is None else repr(r.entropy_estimate),
                "" if r.drift is None else r.drift.hit_index,
                "" if r.scattering is None else repr(r.scattering.d1_to_identity),
                r.counts[-1] if r.counts else "",
            ]
        except NotReversible:
            row = ["NotReversible", "validate", "0.0", "", "", "", ""]
        w.writerow([args.kind, args.param, v] + row)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser():
    p = _Parser(prog="revskew", description="Reversible skew products over shifts: validation and entropy certificates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check the reversibility relations of a system config")
    v.add_argument("--config", required=True)
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("certify", help="run the Case-1 / Case-2 certification pipeline")
    c.add_argument("--config", required=True, help="system config or run config with a 'system' entry")
    c.add_argument("--out")
    c.add_argument("--csv", help="counts CSV (default: next to --out)")
    c.add_argument("--threads", type=int)
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("entropy", help="entropy and block counts of a subshift of finite type")
    e.add_argument("--config", required=True, help='{"alphabet": N, "forbidden": [[...], ...]}')
    e.add_argument("--max-len", type=int, default=12)
    e.add_argument("--out")
    e.set_defaults(func=cmd_entropy)

    g = sub.add_parser("generate", help="emit a model-family system config")
    g.add_argument("kind", choices=["near_identity", "drifting", "coboundary", "random"])
    g.add_argument("--k", type=int)
    g.add_argument("--eps", type=float)
    g.add_argument("--lam", type=float)
    g.add_argument("--alphabet", type=int)
    g.add_argument("--context-half", type=int)
    g.add_argument("--depth", type=int, help="random family: tree depth")
    g.add_argument("--strength", type=float, help="random family: perturbation size")
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("scan", help="certify a family over a parameter sweep, one CSV row per run")
    s.add_argument("--kind", choices=["near_identity", "drifting", "coboundary"], default="drifting")
    s.add_argument("--param", choices=["eps", "k"], default="eps")
    s.add_argument("--values", required=True, help="comma-separated parameter values")
    s.add_argument("--k", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--lam", type=float)
    s.add_argument("--depth", type=int, default=40)
    s.add_argument("--max-len", type=int, default=30)
    s.add_argument("--threads", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"revskew {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
