import json

import pytest

from dvafermion.cache import CacheMismatchError, OperatorCache
from dvafermion.coeff import Window
from dvafermion.dva import trig_current
from dvafermion.fock import NS
from dvafermion.verify import dva_residual


def test_roundtrip_is_bit_identical(tmp_path):
    path = tmp_path / "ops.json"
    cold = trig_current(NS, 4)
    warm1 = trig_current(NS, 4, cache=OperatorCache(path))
    for k in range(-3, 4):
        assert warm1.bare(k).cols == cold.bare(k).cols
    cache = OperatorCache(path)
    warm2 = trig_current(NS, 4, cache=cache)
    for k in range(-3, 4):
        assert warm2.bare(k).cols == cold.bare(k).cols
    assert cache.hits == 7 and cache.misses == 0
    w = Window(-24, 16)
    assert dva_residual(1, -1, warm2, w).to_dict() == dva_residual(1, -1, cold, w).to_dict()


def test_version_mismatch_refused(tmp_path):
    path = tmp_path / "ops.json"
    trig_current(NS, 3, cache=OperatorCache(path)).bare(1)
    data = json.loads(path.read_text())
    data["version"] = 999
    path.write_text(json.dumps(data))
    with pytest.raises(CacheMismatchError):
        trig_current(NS, 3, cache=OperatorCache(path)).bare(1)


def test_tampered_key_refused(tmp_path):
    path = tmp_path / "ops.json"
    trig_current(NS, 3, cache=OperatorCache(path)).bare(1)
    data = json.loads(path.read_text())
    entry = next(iter(data["entries"].values()))
    entry["key"]["lambda"] = "99"
    path.write_text(json.dumps(data))
    with pytest.raises(CacheMismatchError):
        trig_current(NS, 3, cache=OperatorCache(path)).bare(1)


def test_different_cutoffs_do_not_collide(tmp_path):
    path = tmp_path / "ops.json"
    a = trig_current(NS, 3, cache=OperatorCache(path)).bare(1)
    b = trig_current(NS, 4, cache=OperatorCache(path)).bare(1)
    assert len(a.domain) != len(b.domain)
    assert len(json.loads(path.read_text())["entries"]) == 2
