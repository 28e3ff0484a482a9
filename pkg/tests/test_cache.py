import json
import logging

import flint

from pnewcong.cache import MatrixCache, open_cache
from pnewcong.modsym import build_space, pnew_cuspidal_plus


def _mat():
    m = flint.fmpq_mat(2, 3)
    m[0, 0] = flint.fmpq(1, 3)
    m[1, 2] = flint.fmpq(-7, 1)
    m[0, 1] = flint.fmpq(10**30 + 1, 7)
    return m


def test_round_trip(tmp_path):
    c = MatrixCache(tmp_path)
    c.put(("hecke", 3, 6, 2), _mat())
    assert c.get(("hecke", 3, 6, 2)) == _mat()
    assert c.get(("hecke", 3, 6, 5)) is None
    assert (c.hits, c.misses) == (1, 1)


def test_corruption_is_a_miss(tmp_path, caplog):
    c = MatrixCache(tmp_path)
    key = ("hecke", 3, 6, 2)
    c.put(key, _mat())
    path = next(tmp_path.glob("*.json"))
    d = json.loads(path.read_text())
    d["payload"]["entries"][0] = "2/3"
    path.write_text(json.dumps(d))
    with caplog.at_level(logging.WARNING):
        assert c.get(key) is None
    assert "fingerprint" in caplog.text
    path.write_text("{not json")
    assert c.get(key) is None


def test_corrupted_cache_recomputes(tmp_path):
    cache = open_cache(tmp_path)
    first = pnew_cuspidal_plus(build_space(1, 5, 10, cache=cache))
    for path in tmp_path.glob("*.json"):
        d = json.loads(path.read_text())
        entries = d["payload"]["entries"]
        if entries:
            entries[0] = "12345"
            path.write_text(json.dumps(d))
    cache = open_cache(tmp_path)
    again = pnew_cuspidal_plus(build_space(1, 5, 10, cache=cache))
    assert again.basis == first.basis and again.dual == first.dual
    assert cache.misses > 0


def test_cache_hit_on_rerun(tmp_path):
    cache = open_cache(tmp_path)
    pnew_cuspidal_plus(build_space(1, 5, 10, cache=cache))
    cache = open_cache(tmp_path)
    pnew_cuspidal_plus(build_space(1, 5, 10, cache=cache))
    assert cache.hits >= 2 and cache.misses == 0


def test_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("PNEWCONG_CACHE", str(tmp_path / "c"))
    c = open_cache()
    assert c is not None and c.root == tmp_path / "c"
    monkeypatch.delenv("PNEWCONG_CACHE")
    assert open_cache() is None
