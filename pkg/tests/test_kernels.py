import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvafermion import _kernels

ints = st.lists(st.integers(-1000, 1000), min_size=1, max_size=40)


@pytest.fixture
def numpy_path(monkeypatch):
    monkeypatch.setenv("DVAFERMION_NUMBA", "0")


def test_env_flag_switches_path(monkeypatch):
    monkeypatch.setenv("DVAFERMION_NUMBA", "0")
    assert not _kernels.numba_enabled()
    monkeypatch.setenv("DVAFERMION_NUMBA", "1")
    assert _kernels.numba_enabled() == _kernels._HAVE_NUMBA


@settings(max_examples=60, deadline=None)
@given(ints, ints, st.integers(1, 50))
def test_conv_paths_agree(a, b, n):
    a = np.array(a, dtype=np.int64)
    b = np.array(b, dtype=np.int64)
    ref = np.convolve(a.astype(object), b.astype(object))[:n]
    ref = np.concatenate([ref, np.zeros(n - len(ref), dtype=object)]) if len(ref) < n else ref
    fast = _kernels._conv_trunc_nb(a, b, n) if _kernels._HAVE_NUMBA else _kernels._conv_trunc_np(a, b, n)
    slow = _kernels._conv_trunc_np(a, b, n)
    assert list(fast) == list(ref) == list(slow)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=8), st.integers(1, 30))
def test_inverse_paths_agree(tail, n):
    a = np.array([1] + tail, dtype=np.int64)
    fast = _kernels.series_inv(a, n)
    slow = _kernels._inv_np(a, n)
    if fast is None or slow is None:
        return
    assert list(fast) == list(slow)
    prod = np.convolve(a.astype(object), fast.astype(object))[:n]
    assert prod[0] == 1 and all(v == 0 for v in prod[1:])


def test_poch_paths_agree():
    shifts = [-3, 0, 2, 5, 9]
    coefs = [1, 2, -1, 1, 3]
    S1 = np.zeros((5, 40), dtype=np.int64)
    S1[0, 10] = 1
    S2 = S1.copy()
    assert _kernels.poch_expand(S1, shifts, coefs)
    assert _kernels._poch_np(S2, np.array(shifts), np.array(coefs))
    assert np.array_equal(S1, S2)


def test_overflow_is_reported():
    big = np.array([2**40, 2**40], dtype=np.int64)
    assert _kernels.conv_trunc(big, big, 2) is None
    S = np.zeros((2, 4), dtype=np.int64)
    S[0, 0] = 2**62
    assert _kernels.poch_expand(S, [0], [3]) is False


def test_numpy_fallback_used(numpy_path):
    a = np.array([1, -1], dtype=np.int64)
    assert list(_kernels.series_inv(a, 5)) == [1, 1, 1, 1, 1]
