"""Command-line driver: ``pcentral {dims,verify,split,fuzz}``.

Exit codes: 0 pass, 1 verification or verdict failure, 2 budget exceeded,
64 usage error. Reports are JSON with sorted keys, so identical settings
give identical bytes (the verdict grid's wall_time_ms field excepted).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from . import extensions as ext
from . import quotients as qt
from . import splitting as sp
from . import truncalg as ta
from .endos import Ctx
from .words import hall_identity_suite

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64
DEFAULT_SEED = 20240607
DEFAULTS: dict[str, Any] = {
    "p": 2,
    "n": 2,
    "k": 1,
    "series": "Z",
    "seed": DEFAULT_SEED,
    "jobs": 1,
    "cache_dir": None,
    "no_cache": False,
    "output": None,
    "kmax": 4,
    "samples": 500,
    "l": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(p**0.5) + 1))


def _common(sub: argparse.ArgumentParser) -> None:
    g = sub.add_argument_group("context")
    g.add_argument("-p", type=int, default=None, help="prime (default 2)")
    g.add_argument("-n", type=int, default=None, help="rank of the free group (default 2)")
    g.add_argument("-k", type=int, default=None, help="depth k of N_k (default 1)")
    g.add_argument("-s", "--series", choices=["Z", "S"], default=None, help="Zassenhaus or Stallings")
    g.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    g.add_argument("--jobs", type=int, default=None, help="worker processes for grid runs")
    g.add_argument("--cache-dir", default=None, help="directory for the on-disk group cache")
    g.add_argument("--no-cache", action="store_true", default=None, help="disable the on-disk cache")
    g.add_argument("-o", "--output", default=None, help="write the JSON report here")
    g.add_argument("--config", default=None, help="key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pcentral", description="mod-p central series quotients and their automorphism extensions")
    subs = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = subs.add_parser("dims", help="layer dimensions and group orders")
    _common(d)
    d.add_argument("--kmax", type=int, default=None)

    v = subs.add_parser("verify", help="run a verifier")
    v.add_argument(
        "what", choices=["exactness", "centrality", "ia-central", "pcovering", "lemma", "sharpness", "stab-hom", "inclusions"]
    )
    _common(v)
    v.add_argument("--l", type=int, default=None, help="second length for sharpness (default k+1)")
    v.add_argument("--samples", type=int, default=None)

    s = subs.add_parser("split", help="certify splitting or non-splitting")
    _common(s)
    s.add_argument("--grid", action="store_true", help="run the whole verdict grid and write verdict-grid.json")
    s.add_argument("--rule", choices=["published", "corrected"], default="published", help="classification the exit code compares against")

    f = subs.add_parser("fuzz", help="randomized suites")
    f.add_argument("suite", choices=["hall", "series", "congruence"])
    _common(f)
    f.add_argument("--samples", type=int, default=None)
    return ap


def read_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected key=value")
            k, v = (t.strip() for t in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Flags override the config file, which overrides DEFAULTS."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is not None:
            continue
        if key in cfg:
            raw = cfg[key]
            if isinstance(default, bool):
                val: Any = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int) or key == "l":
                try:
                    val = int(raw)
                except ValueError:
                    raise UsageError(f"config {key}={raw!r} is not an integer") from None
            else:
                val = raw
            setattr(args, key, val)
        else:
            setattr(args, key, default)
    if not _is_prime(args.p):
        raise UsageError(f"p = {args.p} is not prime")
    if args.n < 2:
        raise UsageError("n must be >= 2")
    if args.k < 1:
        raise UsageError("k must be >= 1")
    if args.series not in ("Z", "S"):
        raise UsageError("series must be Z or S")
    if args.samples < 1:
        raise UsageError("samples must be >= 1")
    if args.jobs < 1:
        raise UsageError("jobs must be >= 1")
    return args


def _json_default(o: Any) -> Any:
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and o == float("inf"):
        return "inf"
    raise TypeError(f"not serializable: {type(o)}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def emit(obj: dict, args: argparse.Namespace, default_name: str | None = None) -> None:
    text = dumps(obj)
    path = args.output
    if path:
        if os.path.isdir(path) and default_name:
            path = os.path.join(path, default_name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_dims(args: argparse.Namespace) -> int:
    p, n, kmax = args.p, args.n, args.kmax
    rows = []
    if args.series == "Z":
        dims, orders = ta.jennings_dims(p, n, kmax)
        for m in range(1, kmax + 1):
            try:
                got = qt.build_nz(p, n, m).order
            except ta.BudgetExceeded:
                got = None
            rows.append({"m": m, "dim": dims[m - 1], "order": orders[m - 1], "enumerated": got})
    else:
        prev = 1
        for m in range(1, kmax + 1):
            try:
                order = qt.series_group("S", p, n, m).order
            except ta.BudgetExceeded:
                rows.append({"m": m, "dim": None, "order": None, "enumerated": None})
                break
            rows.append({"m": m, "dim": round(np.log(order // prev) / np.log(p)), "order": order, "enumerated": order})
            prev = order
    print(f"series {args.series}  p={p}  n={n}")
    print(f"{'m':>3} {'dim L_m':>8} {'|N_m|':>14} {'enumerated':>12}")
    for r in rows:
        dim = "budget" if r["dim"] is None else str(r["dim"])
        order = "-" if r["order"] is None else str(r["order"])
        en = "-" if r["enumerated"] is None else str(r["enumerated"])
        print(f"{r['m']:>3} {dim:>8} {order:>14} {en:>12}")
    ok = all(r["enumerated"] in (None, r["order"]) for r in rows)
    if args.output:
        emit({"pcentral_report": 1, "kind": "dims", "series": args.series, "p": p, "n": n, "rows": rows, "pass": ok}, args)
    return EXIT_OK if ok else EXIT_FAIL


def _verify_report(args: argparse.Namespace) -> ext.Report | ext.ExactnessReport:
    p, n, k, s = args.p, args.n, args.k, args.series
    what = args.what
    if what == "exactness":
        return ext.verify_exactness(Ctx(p, n, k, s), seed=args.seed)
    if what == "centrality":
        return ext.verify_noncentral(Ctx(p, n, k, s))
    if what == "ia-central":
        ctx = Ctx(p, n, k, s)
        rep = ext.verify_ia_central(ctx, seed=args.seed)
        rep.legs += ext.verify_action_factorization(ctx).legs
        return rep
    if what == "pcovering":
        if p != 2:
            raise UsageError("p-covering checks use the tilde quotients, available for p = 2")
        return ext.verify_pcovering_cases(n)
    if what == "lemma":
        return ext.verify_lemma(s, p, n, k + 1, samples=args.samples, seed=args.seed)
    if what == "sharpness":
        l = args.l if args.l is not None else k + 1
        if l == k:
            raise UsageError("sharpness needs k != l")
        return ext.verify_sharpness(k, l, p, n)
    if what == "stab-hom":
        if p != 2:
            raise UsageError("stab-hom uses the tilde quotients, available for p = 2")
        return ext.verify_stab_hom(p, n, k, seed=args.seed)
    if what == "inclusions":
        return ext.verify_series_inclusions(p, n, k)
    raise UsageError(f"unknown verifier {what}")


def cmd_verify(args: argparse.Namespace) -> int:
    rep = _verify_report(args)
    emit(rep.to_json(), args, f"verify-{args.what}.json")
    return EXIT_OK if rep.ok else EXIT_FAIL


def _rule(name: str):
    return sp.published_rule if name == "published" else sp.corrected_rule


def _grid_point(pt: tuple[str, int, int, int]) -> sp.GridRow:
    return sp.verdict_grid([pt])[0]


def cmd_split(args: argparse.Namespace) -> int:
    rule = _rule(args.rule)
    if not args.grid:
        cert = sp.certify(args.series, args.p, args.n, args.k)
        emit(cert.to_json(), args, "certificate.json")
        valid = sp.certificate_valid(cert)
        want = "SPLIT" if rule(args.series, args.p, args.n, args.k) else "NOSPLIT"
        print(f"verdict {cert.verdict} (expected {want}, certificate {'valid' if valid else 'INVALID'})", file=sys.stderr)
        return EXIT_OK if valid and cert.verdict == want else EXIT_FAIL
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_grid_point, sp.GRID))
    else:
        rows = sp.verdict_grid(sp.GRID)
    ok = True
    for r in rows:
        name = f"cert-{r.series}-{r.p}-{r.n}-{r.k}.json"
        with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
            fh.write(dumps(r.certificate.to_json()))
        r.certificate_path = name
        want = rule(r.series, r.p, r.n, r.k)
        match = r.valid and r.split == want
        ok &= match
        print(f"{r.series} p={r.p} n={r.n} k={r.k}: {r.verdict:8s} rule={'SPLIT' if want else 'NOSPLIT':8s} {'ok' if match else 'MISMATCH'}")
    with open(os.path.join(outdir, "verdict-grid.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps([r.to_json() for r in rows]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fuzz(args: argparse.Namespace) -> int:
    if args.suite == "hall":
        rep = hall_identity_suite(max(args.n, 3), args.samples, args.seed)
        out = {"pcentral_report": 1, "kind": "fuzz_hall", **rep.to_json()}
        if rep.failures:
            out["counterexample"] = min(rep.failures, key=lambda f: sum(len(x) for x in f[1:]))
        emit(out, args)
        return EXIT_OK if rep.ok else EXIT_FAIL
    if args.suite == "congruence":
        crep = ext.check_hall_congruence(args.p, args.n, args.samples, args.seed)
        out = crep.to_json()
        if crep.failures:
            out["counterexample"] = min(crep.failures, key=lambda f: len(json.dumps(f)))
        emit(out, args)
        return EXIT_OK if crep.ok else EXIT_FAIL
    srep = ext.check_series_properties(args.series, args.p, args.n, max(args.k, 2), args.samples, args.seed)
    emit(srep.to_json(), args)
    return EXIT_OK if srep.ok else EXIT_FAIL


COMMANDS = {"dims": cmd_dims, "verify": cmd_verify, "split": cmd_split, "fuzz": cmd_fuzz}


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args = resolve(args)
    except (UsageError, OSError) as exc:
        print(f"pcentral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.no_cache:
        qt.set_cache_dir(None)
    elif args.cache_dir:
        qt.set_cache_dir(args.cache_dir)
    print(f"seed {args.seed}", file=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pcentral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ta.BudgetExceeded as exc:
        print(f"pcentral: budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
