"""Integer kernels behind the exact coefficient ring.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical results.  The numba path is used unless the
environment variable ``DVAFERMION_NUMBA`` is set to ``0`` (or numba is not
importable).  Kernels only ever see int64 data; callers check magnitude
bounds first and fall back to object arrays (python ints / Fractions) when
int64 could overflow.
"""

import os

import numpy as np

INT_LIMIT = 2**62

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def numba_enabled():
    return _HAVE_NUMBA and os.environ.get("DVAFERMION_NUMBA", "1") != "0"


# --------------------------------------------------------------------------
# numpy reference implementations


def _conv_trunc_np(a, b, n):
    out = np.zeros(n, dtype=np.int64)
    if n <= 0 or len(a) == 0 or len(b) == 0:
        return out
    full = np.convolve(a[:n], b[:n])
    m = min(n, len(full))
    out[:m] = full[:m]
    return out


def _poch_np(S, shifts, coefs):
    """Multiply the z-series rows of S by prod (1 - c x^e z), in place.

    Row j holds the z^j coefficient as a dense x-array.  ``shifts`` are the
    x-exponents of the factors measured in array columns.  Returns False if
    an intermediate value could exceed the int64 safety bound.
    """
    rows, width = S.shape
    for e, c in zip(shifts, coefs):
        amax = int(np.abs(S).max()) if S.size else 0
        if amax * (1 + abs(int(c))) >= INT_LIMIT:
            return False
        for j in range(rows - 1, 0, -1):
            if e >= 0:
                if e < width:
                    S[j, e:] -= c * S[j - 1, : width - e]
            else:
                if -e < width:
                    S[j, : width + e] -= c * S[j - 1, -e:]
    return True


def _inv_np(a, n):
    """First n coefficients of 1/a for a[0] == +-1; None on overflow risk."""
    a0 = int(a[0])
    out = np.zeros(n, dtype=np.int64)
    out[0] = a0
    la = len(a)
    for j in range(1, n):
        k = min(j, la - 1)
        if k <= 0:
            continue
        seg_a = a[1 : k + 1]
        seg_b = out[j - k : j][::-1]
        bound = float(np.abs(seg_a).astype(np.float64) @ np.abs(seg_b).astype(np.float64))
        if bound >= INT_LIMIT:
            return None
        out[j] = -a0 * int(seg_a @ seg_b)
    return out


# --------------------------------------------------------------------------
# numba versions

if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _conv_trunc_nb(a, b, n):
        out = np.zeros(n, dtype=np.int64)
        la = min(len(a), n)
        lb = len(b)
        for i in range(la):
            ai = a[i]
            if ai == 0:
                continue
            top = min(lb, n - i)
            for j in range(top):
                out[i + j] += ai * b[j]
        return out

    @numba.njit(cache=True)
    def _poch_nb(S, shifts, coefs):
        rows, width = S.shape
        for t in range(len(shifts)):
            e = shifts[t]
            c = coefs[t]
            amax = 0
            for j in range(rows):
                for k in range(width):
                    v = abs(S[j, k])
                    if v > amax:
                        amax = v
            if float(amax) * (1.0 + abs(float(c))) >= 4.0e18:
                return False
            for j in range(rows - 1, 0, -1):
                if e >= 0:
                    for k in range(width - 1, e - 1, -1):
                        S[j, k] -= c * S[j - 1, k - e]
                else:
                    for k in range(0, width + e):
                        S[j, k] -= c * S[j - 1, k - e]
        return True

    @numba.njit(cache=True)
    def _inv_nb(a, n, out):
        a0 = a[0]
        out[0] = a0
        la = len(a)
        for j in range(1, n):
            acc = 0
            bound = 0.0
            top = min(j, la - 1)
            for i in range(1, top + 1):
                ai = a[i]
                if ai != 0:
                    b = out[j - i]
                    acc += ai * b
                    bound += abs(float(ai)) * abs(float(b))
            if bound >= 4.0e18:
                return False
            out[j] = -a0 * acc
        return True


# --------------------------------------------------------------------------
# dispatch


def conv_trunc(a, b, n):
    """Truncated product of two int64 coefficient arrays, or None on overflow risk."""
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    la, lb = min(len(a), n), min(len(b), n)
    if la == 0 or lb == 0:
        return np.zeros(n, dtype=np.int64)
    amax = int(np.abs(a[:la]).max())
    bmax = int(np.abs(b[:lb]).max())
    if amax * bmax * min(la, lb) >= INT_LIMIT:
        return None
    if numba_enabled():
        return _conv_trunc_nb(a, b, n)
    return _conv_trunc_np(a, b, n)


def poch_expand(S, shifts, coefs):
    """In-place product of the rows of S with the listed linear factors."""
    shifts = np.asarray(shifts, dtype=np.int64)
    coefs = np.asarray(coefs, dtype=np.int64)
    if numba_enabled():
        return bool(_poch_nb(S, shifts, coefs))
    return _poch_np(S, shifts, coefs)


def series_inv(a, n):
    """First n coefficients of 1/a for an int64 array with a[0] in {1, -1}."""
    if numba_enabled():
        out = np.zeros(n, dtype=np.int64)
        ok = _inv_nb(a, n, out)
        return out if ok else None
    return _inv_np(a, n)
