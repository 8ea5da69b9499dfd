"""Command-line driver. Every command prints one JSON document on stdout.

Exit codes: 0 ok, 2 usage, 3 window exhausted, 4 verification failure,
5 internal error, 6 resource guard.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analyze, construct, core, growth, tridiag
from .errors import BandGrowthError, UsageError
from .field import FieldConfig

DEFAULT_SEED = 0xB41D
EXIT_OK, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_VERIFY, EXIT_INTERNAL, EXIT_RESOURCE = 0, 2, 3, 4, 5, 6


def _fraction(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from exc


def _field(text: str) -> FieldConfig:
    try:
        return FieldConfig.parse(text)
    except (UsageError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer (0x.. allowed): {text}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _write(out: Optional[Path], name: str, text: str):
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------- builtins


def _parse_kv(spec: str) -> dict:
    out = {}
    for part in filter(None, spec.split(",")):
        if "=" not in part:
            raise UsageError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def builtin_matrix(name: str, field: FieldConfig, seed: int) -> core.LazyMatrix:
    """Named infinite matrices: ``shift``, ``shiftT``, ``identity``,
    ``R:r=0.5[,seed=N]`` and ``random:c=1,s=0.5[,seed=N]``."""
    head, _, rest = name.partition(":")
    kv = _parse_kv(rest)
    sd = int(kv["seed"], 0) if "seed" in kv else seed
    if head == "shift":
        return core.shift_lazy(field)
    if head in ("shiftT", "shift^T"):
        return core.shift_lazy(field, transposed=True)
    if head == "identity":
        return core.identity_lazy(field)
    if head == "R":
        bs = construct.block_structure(_fraction(kv.get("r", "1/2")), padded=kv.get("padded") == "1")
        return construct.embed_R(bs, construct.BlockElement.random(bs, field, sd))
    if head == "random":
        return core.random_growth_lazy(field, _fraction(kv.get("c", "1")), _fraction(kv.get("s", "0")), sd)
    raise UsageError(f"unknown builtin matrix {name!r}")


def _load_window(source: str, field: FieldConfig, window: int, seed: int) -> core.WindowMatrix:
    if Path(source).suffix == ".json" or Path(source).exists():
        w = core.load_matrix(source)
        field.check_same(w.field)
        return w
    return builtin_matrix(source, field, seed).window(window)


# ---------------------------------------------------------------- commands


def cmd_profile(args) -> dict:
    w = _load_window(args.matrix, args.field, args.window, args.seed)
    prof = core.band_profile(w)
    _write(args.out, "profile.csv", prof.to_csv())
    out = {"command": "profile", "window": w.n, "valid_to": w.valid_to, "exact_to": prof.exact_to}
    try:
        out["fit"] = growth.fit_exponent(prof, skip=args.skip).to_json()
    except BandGrowthError as exc:
        out["fit"] = None
        out["fit_note"] = str(exc)
    if args.out is None:
        out["profile"] = prof.g[: prof.exact_to].tolist()
    return out


def cmd_construct(args) -> dict:
    bs = construct.block_structure(args.r, padded=args.padded)
    K = bs.blocks_in(args.window)
    x = construct.BlockElement.random(bs, args.field, args.seed)
    w = construct.embed_R(bs, x).window(args.window)
    c = construct.r_curve_constant(bs)
    ok = core.verify_growth(w, c, bs.r)
    out = {
        "command": "construct",
        "structure": bs.to_json(min(K, 64)),
        "blocks_in_window": K,
        "window": args.window,
        "random_element_in_W": {"c": c, "s": bs.r, "pass": ok},
        "minimal_constant": growth.minimal_constant(w, bs.r),
    }
    if args.padded:
        gs = construct.default_generators(bs, args.field, scan_blocks=min(K, 4096) or 1)
        out["generators"] = gs.metadata()
    out["pass"] = ok
    return out


def _generators(args) -> construct.GeneratorSet:
    return construct.default_generators(construct.block_structure(args.r, padded=True), args.field)


def cmd_keyprop(args) -> dict:
    rep = construct.key_property_report(_generators(args), args.K)
    rep["command"] = "keyprop"
    return rep


def cmd_cross(args) -> dict:
    rep = construct.cross_report(_generators(args), args.K)
    rep["command"] = "cross"
    return rep


def cmd_tridiag(args) -> dict:
    if args.matrices:
        xs = [_load_window(m, args.field, args.window, args.seed) for m in args.matrices]
    else:
        rng = np.random.default_rng(args.seed)
        xs = [core.random_banded(args.field, args.window, args.bandwidth, rng) for _ in range(args.k)]
    report, xts = tridiag.block_tridiagonalize(xs)
    c, passed = tridiag.linear_growth_certificate(report, xts)
    if args.out is not None:
        report.dump(args.out)
        for i, xt in enumerate(xts, start=1):
            core.dump_matrix(xt, args.out / f"x{i}_transformed.json")
    out = report.to_json()
    out.update({"command": "tridiag", "certificate_pass": passed})
    out["pass"] = bool(report.similarity_ok and report.within_geometric_bound() and (passed or not report.strict))
    return out


def cmd_step1(args) -> dict:
    n_values = [float(v) for v in args.n_values.split(",")]
    reports = []
    ok = True
    for s in args.s_grid:
        rep = growth.power_growth_check(args.c, s, args.m_max, n_values)
        reports.append(rep.to_json())
        ok &= rep.passed
        _write(args.out, f"step1_s{s:g}.csv", rep.grid_csv())
    return {"command": "step1", "reports": reports, "pass": ok}


def cmd_stretch(args) -> dict:
    if args.s is None:
        raise UsageError("stretch needs --s")
    bs = construct.block_structure(args.r)
    st = construct.stretch_embed(bs, args.s, args.c)
    rep = construct.stretch_check(st, args.field, args.window, args.pairs, args.seed)
    rep["command"] = "stretch"
    return rep


def cmd_estimate(args) -> dict:
    if args.generators:
        gens = [builtin_matrix(g, args.field, args.seed) for g in args.generators]
    else:
        bs = construct.block_structure(args.r)
        gens = [construct.embed_R(bs, construct.BlockElement.random(bs, args.field, args.seed + i)) for i in range(2)]
    est = analyze.estimate_growth(gens, args.max_len, args.window, seed=args.seed)
    _write(args.out, "envelope.csv", est.envelope_csv())
    out = est.to_json()
    out["command"] = "estimate"
    return out


def cmd_free(args) -> dict:
    x = _load_window(args.x, args.field, args.window, args.seed)
    y = _load_window(args.y, args.field, args.window, args.seed + 1)
    res = analyze.freeness_check(x, y, args.max_len)
    out = res.to_json()
    out["command"] = "free"
    return out


def cmd_report(args) -> dict:
    """Small end-to-end run over every module; artifacts land in ``--out``."""
    F = args.field
    sub = {}
    sub["step1"] = growth.power_growth_check(1.0, 0.5, 16, [1e2, 1e3, 1e4]).to_json()
    gs = construct.default_generators(construct.block_structure(0.5, padded=True), F)
    sub["keyprop"] = construct.key_property_report(gs, 8)
    sub["cross"] = construct.cross_report(gs, 7)
    rng = np.random.default_rng(args.seed)
    xs = [core.random_banded(F, 120, 3, rng) for _ in range(2)]
    rep, xts = tridiag.block_tridiagonalize(xs)
    tridiag.linear_growth_certificate(rep, xts)
    sub["tridiag"] = rep.to_json()
    bs = construct.block_structure(0.5)
    sub["constants"] = analyze.constants_series(analyze.IdentityEmbedding(bs, F), 0.5, 8).to_json()
    sub["free"] = analyze.freeness_check(core.shift_lazy(F).window(16), core.shift_lazy(F, True).window(16), 2).to_json()
    for name, obj in sub.items():
        _write(args.out, f"{name}.json", _dump(obj))
    ok = sub["keyprop"]["pass"] and sub["cross"]["pass"] and sub["step1"]["pass"]
    return {"command": "report", "sections": sorted(sub), "summary": sub, "pass": bool(ok)}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", type=_field, default=FieldConfig.gfp(7), help="gfp:P or q (default gfp:7)")
    common.add_argument("--r", type=_fraction, default=0.5, help="block exponent r in (0, 1)")
    common.add_argument("--s", type=_fraction, default=None, help="target exponent")
    common.add_argument("--window", type=int, default=500)
    common.add_argument("--max-len", type=int, default=3, dest="max_len")
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common.add_argument("--out", type=Path, default=None, help="directory for CSV/JSON artifacts")

    p = argparse.ArgumentParser(prog="bandgrowth", description="Bandwidth growth of infinite matrices.")
    sp = p.add_subparsers(dest="command", required=True)

    a = sp.add_parser("profile", parents=[common], help="band profile and fitted exponent")
    a.add_argument("matrix", help="matrix JSON file or builtin (shift, shiftT, identity, R:r=.., random:c=..,s=..)")
    a.add_argument("--skip", type=int, default=16)
    a.set_defaults(func=cmd_profile)

    a = sp.add_parser("construct", parents=[common], help="block structure and R membership")
    a.add_argument("--padded", action="store_true")
    a.set_defaults(func=cmd_construct)

    a = sp.add_parser("keyprop", parents=[common], help="verify all matrix-unit recipes up to block K")
    a.add_argument("--K", type=int, default=16)
    a.set_defaults(func=cmd_keyprop)

    a = sp.add_parser("cross", parents=[common], help="verify cross elements up to block K")
    a.add_argument("--K", type=int, default=16)
    a.set_defaults(func=cmd_cross)

    a = sp.add_parser("tridiag", parents=[common], help="simultaneous block tridiagonalization")
    a.add_argument("matrices", nargs="*", help="matrix files or builtins; random pair if omitted")
    a.add_argument("--k", type=int, default=2, help="number of random matrices")
    a.add_argument("--bandwidth", type=int, default=3)
    a.set_defaults(func=cmd_tridiag)

    a = sp.add_parser("step1", parents=[common], help="power-growth recurrence check")
    a.add_argument("--s-grid", type=lambda t: [_fraction(v) for v in t.split(",")], default=[0.25, 0.5, 0.75], dest="s_grid")
    a.add_argument("--c", type=_fraction, default=1.0)
    a.add_argument("--m-max", type=int, default=64, dest="m_max")
    a.add_argument("--n-values", default="1e2,1e3,1e4,1e5,1e6", dest="n_values")
    a.set_defaults(func=cmd_step1)

    a = sp.add_parser("stretch", parents=[common], help="stretch embedding R -> G(s)")
    a.add_argument("--c", type=_fraction, default=1.0)
    a.add_argument("--pairs", type=int, default=10)
    a.set_defaults(func=cmd_stretch)

    a = sp.add_parser("estimate", parents=[common], help="representation growth exponent")
    a.add_argument("generators", nargs="*", help="builtin generators; two random R elements if omitted")
    a.set_defaults(func=cmd_estimate)

    a = sp.add_parser("free", parents=[common], help="word independence of a pair")
    a.add_argument("x")
    a.add_argument("y")
    a.set_defaults(func=cmd_free)

    a = sp.add_parser("report", parents=[common], help="small run over every module")
    a.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = args.func(args)
    except BandGrowthError as exc:
        print(_dump({"command": args.command, "error": type(exc).__name__, "message": str(exc)}))
        return exc.exit_code
    except MemoryError:
        print(_dump({"command": args.command, "error": "MemoryError"}))
        return EXIT_RESOURCE
    except Exception as exc:  # invariant breach inside a module
        print(_dump({"command": args.command, "error": type(exc).__name__, "message": str(exc)}))
        return EXIT_INTERNAL
    text = _dump(out)
    print(text)
    _write(args.out, f"{args.command}.json", text)
    if out.get("pass") is False:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
