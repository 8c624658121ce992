"""Compare the numba kernels with their numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on both paths (numba warm-up excluded) and the outputs
are checked to be identical.  The last rows time an end-to-end structure
function expansion, which exercises all three kernels.
"""

import argparse
import os
import time

import numpy as np

from dvafermion import _kernels
from dvafermion.qseries import f_series


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _both(name, fn, repeat):
    rows = []
    results = {}
    for flag in ("1", "0"):
        os.environ["DVAFERMION_NUMBA"] = flag
        fn()  # warm-up / JIT compile
        dt, out = _time(fn, repeat)
        results[flag] = out
        rows.append((name, "numba" if flag == "1" else "numpy", dt))
    os.environ.pop("DVAFERMION_NUMBA", None)
    a, b = results["1"], results["0"]
    same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
    return rows, same


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(7)

    a = rng.integers(-50, 50, 4000).astype(np.int64)
    b = rng.integers(-50, 50, 4000).astype(np.int64)

    def conv():
        return _kernels.conv_trunc(a, b, 4000)

    def poch():
        S = np.zeros((13, 600), dtype=np.int64)
        S[0, 0] = 1
        shifts = list(range(4, 600, 4))
        _kernels.poch_expand(S, shifts, [1] * len(shifts))
        return S

    inv_in = np.zeros(3000, dtype=np.int64)
    inv_in[0], inv_in[1], inv_in[2] = 1, -1, 1  # inverse stays bounded

    def inv():
        out = _kernels.series_inv(inv_in, 3000)
        assert out is not None
        return out

    def fser():
        f_series.cache_clear()
        f = f_series(4, 12, 400)
        return tuple(np.asarray([int(v) for v in f.coeff(l).coeffs]) for l in range(13))

    print(f"numba available: {_kernels._HAVE_NUMBA}")
    print(f"{'kernel':<22}{'path':<8}{'seconds':>12}")
    ok = True
    for name, fn in (("conv_trunc 4000", conv), ("poch_expand 13x600", poch),
                     ("series_inv 3000", inv), ("f_series r=4 L=12", fser)):
        rows, same = _both(name, fn, args.repeat)
        ok &= same
        for kname, path, dt in rows:
            print(f"{kname:<22}{path:<8}{dt:>12.5f}")
        speed = rows[1][2] / rows[0][2] if rows[0][2] > 0 else float("nan")
        print(f"{'':<22}{'speedup':<8}{speed:>11.1f}x  identical={same}")
    if not ok:
        raise SystemExit("numba and numpy paths disagree")


if __name__ == "__main__":
    main()
