"""Command-line interface: ``dvafermion <command> [options]``.

Exit codes: 0 everything passed, 1 a check failed, 2 bad configuration,
3 nothing could be checked (all items skipped).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath

from . import __version__
from .cache import CacheMismatchError, OperatorCache
from .chars import euler_product_dims, graded_dimension, highest_weight_scan, t0_block_spectrum
from .coeff import Window, XLaurent, parse_rational, xl_eval_float
from .dva import ANTICOMMUTING, COMMUTING, elliptic_current, trig_current
from .fock import FockSpace, default_contraction, mode2
from .qseries import f_series, identity_213, identity_eta_product
from .verify import (
    FAIL,
    PASS,
    SKIPPED,
    anticommutator_suite,
    dva_residual,
    elliptic_residual,
    float_prec_for,
    vacuum_residual,
)

THREADS_ENV = "DVAFERMION_THREADS"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SKIPPED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    r: int | None = None
    backend: str = "exact"
    x0: str | None = None
    prec: int = 128
    cutoff: str | None = None
    window: str | None = None
    modes: str | None = None
    sectors: list = field(default_factory=list)
    sign: str | None = None
    perturb: str | None = None
    output: str = "json"
    cache: str | None = None
    threads: int = 1

    def validate(self):
        if self.backend not in ("exact", "float"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "float":
            if self.x0 is None:
                raise ConfigError("--x0 is required with --backend float")
            x0 = parse_rational(self.x0)
            if not 0 < x0 < 1:
                raise ConfigError("--x0 must lie in (0, 1)")
        elif self.x0 is not None and self.command not in ("spectrum",):
            raise ConfigError("--x0 only applies to the float backend")
        if self.cutoff is not None and parse_rational(self.cutoff) <= 0:
            raise ConfigError("--lambda must be positive")
        if self.prec <= 0 or self.threads <= 0:
            raise ConfigError("--bits and --threads must be positive")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# perturbations (negative controls)


def _perturbation(text: str | None, window: Window):
    """Returns (f_shift, kappa_shift, contraction) for a --perturb value."""
    if not text:
        return None, None, default_contraction
    bump = XLaurent.monomial(window.hi // 2)
    what, _, arg = text.partition(":")
    if what == "f":
        return {int(arg or 1): bump}, None, default_contraction
    if what == "kappa":
        return None, bump, default_contraction
    if what == "contraction":
        target = mode2(arg or "1/2")

        def contraction(m2, _t=abs(target)):
            base = default_contraction(m2)
            return base + bump if m2 == _t else base

        return None, None, contraction
    raise ConfigError(f"unknown perturbation {text!r} (use f:L, kappa or contraction:M)")


# --------------------------------------------------------------------------
# verification tasks (top-level so they pickle into worker processes)


def _make_current(task: dict):
    window = Window(*task["window"])
    f_shift, kappa_shift, contraction = _perturbation(task["perturb"], window)
    cache = OperatorCache(task["cache"], task["backend"]) if task["cache"] and task["threads"] == 1 else None
    if task["kind"] == "dva":
        cur = trig_current(task["sector"], task["lambda"], r=task["r"], kappa_shift=kappa_shift,
                           contraction=contraction, cache=cache)
    else:
        cur = elliptic_current(task["lambda"], task["sign"], r=task["r"], kappa_shift=kappa_shift,
                               contraction=contraction, cache=cache)
    return cur, window, f_shift


_CURRENTS = {}


def _run_relation(task: dict) -> dict:
    key = tuple(sorted((k, str(v)) for k, v in task.items() if k not in ("m", "n")))
    if key not in _CURRENTS:
        _CURRENTS.clear()
        _CURRENTS[key] = _make_current(task)
    cur, window, f_shift = _CURRENTS[key]
    kw = dict(backend=task["backend"], x0=task["x0"], bits=task["bits"], tol=task["tol"],
              f_shift=f_shift, perturbation=task["perturb"])
    fn = dva_residual if task["kind"] == "dva" else elliptic_residual
    return fn(task["m"], task["n"], cur, window, **kw).to_dict()


def _map(fn, tasks: list, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


def _mode_grid(kind: str, mmax) -> list:
    top = mode2(mmax)
    if kind == "dva":
        vals = [Fraction(k, 2) for k in range(-top, top + 1) if k % 2 == 0]
    else:
        vals = [Fraction(k, 2) for k in range(-top, top + 1) if k % 2 == 1]
    return [(str(a), str(b)) for a in vals for b in vals]


def _parse_pairs(text: str) -> list:
    """"m,n;m,n" -> [(m, n), ...]"""
    out = []
    for item in text.split(";"):
        a, _, b = item.partition(",")
        if not b:
            raise ConfigError(f"bad mode pair {item!r}; expected m,n")
        out.append((str(parse_rational(a)), str(parse_rational(b))))
    return out


def _sectors(text: str) -> list:
    t = text.lower()
    if t == "both":
        return ["NS", "R"]
    if t in ("ns", "r"):
        return [t.upper()]
    raise ConfigError(f"unknown sector {text!r}")


def _summary_code(statuses: list) -> int:
    if any(s == FAIL for s in statuses):
        return EXIT_FAIL
    if statuses and all(s == SKIPPED for s in statuses):
        return EXIT_SKIPPED
    return EXIT_OK


# --------------------------------------------------------------------------
# commands


def cmd_fseries(args, cfg: RunConfig):
    window = Window.parse(args.window) if args.window else Window(-24, 24)
    f = f_series(args.r, max(args.L, 1), window.prec)
    rows = []
    for l in range(args.L + 1):
        c = f.coeff(l)
        row = {"l": l}
        if cfg.backend == "exact":
            row["coefficient"] = str(c)
            row["terms"] = {str(e): str(v) for e, v in sorted(c.terms().items())}
        else:
            work = f_series(args.r, max(args.L, 1), float_prec_for(cfg.x0, cfg.prec))
            v = xl_eval_float(work.coeff(l), cfg.x0, cfg.prec)
            row["value"] = mpmath.nstr(v.value, 30)
            row["err"] = mpmath.nstr(v.err, 3)
        rows.append(row)
    return {"rows": rows}, EXIT_OK


def cmd_verify(args, cfg: RunConfig):
    what = args.what
    window = Window.parse(args.window) if args.window else None
    if what in ("dva", "elliptic"):
        mmax = parse_rational(args.modes if args.modes is not None else ("3" if what == "dva" else "5/2"))
        window = window or Window(-24, 20)
        base = dict(kind=what, r=cfg.r, backend=cfg.backend, x0=cfg.x0, bits=cfg.prec, tol=args.tol,
                    window=(window.lo, window.hi), perturb=cfg.perturb, cache=cfg.cache,
                    threads=cfg.threads, **{"lambda": cfg.cutoff})
        groups = []
        if what == "dva":
            for sec in cfg.sectors:
                groups.append(dict(base, sector=sec, sign=None))
        else:
            signs = [ANTICOMMUTING, COMMUTING] if cfg.sign == "both" else [cfg.sign]
            for s in signs:
                groups.append(dict(base, sector=None, sign=s))
        grid = _parse_pairs(args.pairs) if args.pairs else _mode_grid(what, mmax)
        tasks = [dict(g, m=m, n=n) for g in groups for (m, n) in grid]
        results = _map(_run_relation, tasks, cfg.threads)
        out = {"results": results}
        if what == "elliptic":
            verdict = {}
            for s in {g["sign"] for g in groups}:
                st = [r["status"] for r in results if r["convention"] == s]
                verdict[s] = FAIL if FAIL in st else (SKIPPED if all(x == SKIPPED for x in st) else PASS)
            passing = sorted(s for s, v in verdict.items() if v == PASS)
            out["conventions"] = verdict
            out["adopted_convention"] = passing[0] if len(passing) == 1 else None
            out["delta_coefficient"] = "c/2 * [(-x^-1)^(2m) - x^(-2m) - (-x)^(2m) + x^(2m)] = c (x^(2m) - x^(-2m)) for odd 2m"
            if len(groups) > 1:
                code = EXIT_OK if len(passing) == 1 else EXIT_FAIL
                return out, code
        return out, _summary_code([r["status"] for r in results])
    if what == "vacuum":
        window = window or Window(-24, 20)
        results = []
        for sec in cfg.sectors:
            cur = trig_current(sec, cfg.cutoff)
            rep = vacuum_residual(cur, window, backend=cfg.backend, x0=cfg.x0, bits=cfg.prec, tol=args.tol)
            rep.pop("exact_values", None)
            rep["status"] = PASS if rep["pass"] else FAIL
            results.append(rep)
        return {"results": results}, _summary_code([r["status"] for r in results])
    if what == "anticomm":
        mmax = args.modes if args.modes is not None else cfg.cutoff
        results = []
        for sec in cfg.sectors:
            rep = anticommutator_suite(FockSpace(sec, cfg.cutoff), mmax).to_dict()
            rep["status"] = PASS if rep["pass"] else FAIL
            results.append(rep)
        return {"results": results}, _summary_code([r["status"] for r in results])
    if what == "identities":
        window = window or Window(-24, 24)
        rs = [cfg.r] if cfg.r is not None else [2, 3, 4, 5]
        results = []
        for r in rs:
            a = identity_213(r, args.L, window.prec)
            b = identity_eta_product(r, args.L, window.prec)
            ok_a, ok_b = a.zero_through(window.hi), b.zero_through(window.hi)
            results.append({"r": r, "L": args.L, "window": [window.lo, window.hi],
                            "structure_function_identity": ok_a, "eta_product_identity": ok_b,
                            "status": PASS if ok_a and ok_b else FAIL})
        return {"results": results}, _summary_code([r["status"] for r in results])
    raise ConfigError(f"unknown verification {what!r}")


def cmd_spectrum(args, cfg: RunConfig):
    if cfg.x0 is None:
        raise ConfigError("--x0 is required")
    results = []
    for sec in cfg.sectors:
        rep = t0_block_spectrum(sec, args.level, cfg.x0, cfg.prec, cutoff=cfg.cutoff)
        results.append(rep.to_dict())
    return {"results": results}, EXIT_OK


def cmd_chars(args, cfg: RunConfig):
    results = []
    code = EXIT_OK
    for sec in cfg.sectors:
        enum = graded_dimension(sec, args.nmax)
        oracle = dict(euler_product_dims(sec, args.nmax))
        rows = [{"level": str(l), "dim": d, "product": oracle[l]} for l, d in enum]
        ok = all(r["dim"] == r["product"] for r in rows)
        if not ok:
            code = EXIT_FAIL
        results.append({"sector": sec, "rows": rows, "matches_product": ok})
    return {"results": results}, code


def cmd_hwscan(args, cfg: RunConfig):
    results = []
    for sec in cfg.sectors:
        rows = highest_weight_scan(sec, args.kmax, args.nmax, cutoff=cfg.cutoff)
        results.append({"sector": sec, "kmax": args.kmax,
                        "rows": [{"level": str(l), "states": n, "kernel": k} for l, n, k in rows]})
    return {"results": results}, EXIT_OK


# --------------------------------------------------------------------------
# parser and output


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dvafermion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, backend=True):
        sp.add_argument("--format", dest="output", choices=["json", "csv", "text"], default="json")
        if backend:
            sp.add_argument("--backend", choices=["exact", "float"], default="exact")
            sp.add_argument("--x0", default=None, help="rational point in (0,1) for the float backend")
            sp.add_argument("--bits", type=int, default=128, help="float precision in bits")

    f = sub.add_parser("fseries", help="coefficients f_0..f_L of the structure function")
    f.add_argument("--r", type=int, required=True)
    f.add_argument("--L", type=int, default=5)
    f.add_argument("--window", default=None, help="x-exponent window lo:hi")
    common(f)

    v = sub.add_parser("verify", help="run relation checks")
    v.add_argument("what", choices=["dva", "elliptic", "vacuum", "anticomm", "identities"])
    v.add_argument("--r", type=int, default=None)
    v.add_argument("--sector", default="both")
    v.add_argument("--lambda", dest="cutoff", default="8")
    v.add_argument("--modes", default=None, help="largest |m|, |n| on the grid")
    v.add_argument("--pairs", default=None, help='explicit mode pairs "m,n;m,n" instead of the full grid')
    v.add_argument("--window", default=None, help="x-exponent window lo:hi (write --window=-24:20)")
    v.add_argument("--sign", choices=[ANTICOMMUTING, COMMUTING, "both"], default="both")
    v.add_argument("--perturb", default=None, help="negative control: f:L, kappa or contraction:M")
    v.add_argument("--tol", default="1e-25")
    v.add_argument("--L", type=int, default=12, help="z-order for the series identities")
    v.add_argument("--cache", default=None, help="operator cache file")
    v.add_argument("--threads", type=int, default=None)
    common(v)

    s = sub.add_parser("spectrum", help="eigenvalues of T_0 on one level")
    s.add_argument("--sector", default="ns")
    s.add_argument("--level", default="0")
    s.add_argument("--lambda", dest="cutoff", default=None)
    s.add_argument("--x0", required=True)
    s.add_argument("--bits", type=int, default=128)
    s.add_argument("--format", dest="output", choices=["json", "csv", "text"], default="json")

    c = sub.add_parser("chars", help="graded dimensions against the product formula")
    c.add_argument("--sector", default="both")
    c.add_argument("--nmax", default="6")
    common(c, backend=False)

    h = sub.add_parser("hwscan", help="joint kernels of T_1..T_kmax per level")
    h.add_argument("--sector", default="both")
    h.add_argument("--kmax", type=int, default=2)
    h.add_argument("--nmax", default="4")
    h.add_argument("--lambda", dest="cutoff", default=None)
    common(h, backend=False)
    return p


def _config(args) -> RunConfig:
    cmd = args.command
    cfg = RunConfig(command=cmd, output=getattr(args, "output", "json"))
    cfg.backend = getattr(args, "backend", "exact")
    cfg.x0 = getattr(args, "x0", None)
    cfg.prec = getattr(args, "bits", 128)
    cfg.window = getattr(args, "window", None)
    cfg.modes = getattr(args, "modes", None)
    cfg.perturb = getattr(args, "perturb", None)
    cfg.cache = getattr(args, "cache", None)
    cfg.cutoff = getattr(args, "cutoff", None)
    threads = getattr(args, "threads", None)
    cfg.threads = threads if threads is not None else _default_threads()
    if hasattr(args, "sector"):
        cfg.sectors = _sectors(args.sector)
    if cmd == "fseries":
        cfg.r = args.r
    elif cmd == "verify":
        if args.what in ("dva", "vacuum"):
            cfg.r = args.r if args.r is not None else 4
            if cfg.r != 4:
                raise ConfigError("the trigonometric current realizes r = 4 only")
        elif args.what == "elliptic":
            cfg.r = args.r if args.r is not None else 2
            cfg.sign = args.sign
        else:
            cfg.r = args.r
        if args.what == "elliptic":
            cfg.sectors = []
    cfg.validate()
    return cfg


def _to_csv(payload: dict) -> str:
    rows = []
    for res in payload.get("results", []):
        if "rows" in res:
            for row in res["rows"]:
                rows.append({**{k: v for k, v in res.items() if k != "rows"}, **row})
        else:
            rows.append(res)
    if not rows and "rows" in payload:
        rows = payload["rows"]
    keys = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in row.items()})
    return buf.getvalue()


def _to_text(payload: dict) -> str:
    lines = []
    for res in payload.get("results", payload.get("rows", [])):
        lines.append("  ".join(f"{k}={v}" for k, v in res.items() if not isinstance(v, (dict, list))))
        for row in res.get("rows", []) if isinstance(res, dict) else []:
            lines.append("    " + "  ".join(f"{k}={v}" for k, v in row.items()))
    for key in ("adopted_convention", "conventions"):
        if key in payload:
            lines.append(f"{key}: {payload[key]}")
    return "\n".join(lines) + "\n"


COMMANDS = {"fseries": cmd_fseries, "verify": cmd_verify, "spectrum": cmd_spectrum,
            "chars": cmd_chars, "hwscan": cmd_hwscan}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        payload, code = COMMANDS[args.command](args, cfg)
    except (ConfigError, ValueError, CacheMismatchError) as exc:
        print(f"dvafermion: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = {"version": __version__, "command": args.command, "config": asdict(cfg), **payload,
               "exit_code": code}
    if args.command == "verify":
        payload["config"]["what"] = args.what
    if cfg.output == "json":
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    elif cfg.output == "csv":
        sys.stdout.write(_to_csv(payload))
    else:
        sys.stdout.write(_to_text(payload))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
