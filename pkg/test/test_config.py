import json

import pytest

from logmodcert import config
from logmodcert.config import RunConfig
from logmodcert.errors import ConfigError
from logmodcert.parallel import chunk_ranges, execute_items


def test_tolerance_override_rebinds_globals():
    config.apply_tolerance_overrides({"eps_geo": 1e-6})
    assert config.EPS_GEO == 1e-6
    assert config.current_tolerances()["eps_geo"] == 1e-6


@pytest.mark.parametrize("overrides", [{"eps_unknown": 1.0}, {"eps_geo": 0.0}, {"rank_tol": -1e-3}])
def test_bad_tolerances_rejected(overrides):
    with pytest.raises(ConfigError):
        config.apply_tolerance_overrides(overrides)


def test_run_config_blocks_and_merge():
    cfg = RunConfig.from_dict({"seed": 7, "chain": {"instances": 10, "m": "3"}, "out": "runs"})
    assert cfg.seed == 7
    assert cfg.out == "runs"
    merged = cfg.merged("chain", {"instances": 20, "k": None})
    assert merged == {"instances": 20, "m": "3"}
    assert cfg.block("lab") == {}


def test_run_config_masks_seed_to_64_bits():
    assert RunConfig.from_dict({"seed": -1}).seed == (1 << 64) - 1


@pytest.mark.parametrize("raw", [
    {"unknown": 1},
    {"tolerances": {"eps_xyz": 1}},
    {"chain": [1, 2]},
    {"seed": "abc"},
    [],
])
def test_run_config_rejects_bad_documents(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_run_config_load_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(str(path))


def test_run_config_load(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "tolerances": {"eps_geo": 1e-8}}))
    cfg = RunConfig.load(str(path))
    assert cfg.seed == 3 and cfg.tolerances == {"eps_geo": 1e-8}


def test_resolve_threads_from_env(monkeypatch):
    monkeypatch.setenv("LOGMOD_THREADS", "3")
    assert config.resolve_threads() == 3
    assert config.resolve_threads(5) == 5
    monkeypatch.setenv("LOGMOD_THREADS", "many")
    with pytest.raises(ConfigError):
        config.resolve_threads()
    with pytest.raises(ConfigError):
        config.resolve_threads(0)


def test_execute_items_keeps_input_order():
    items = list(range(50))
    assert execute_items(items, lambda x: x * x, workers=4) == [x * x for x in items]
    assert execute_items([], lambda x: x, workers=4) == []


def test_chunk_ranges_cover_total():
    ranges = chunk_ranges(10, 3)
    assert [len(r) for r in ranges] == [3, 3, 4]
    assert sum(len(r) for r in chunk_ranges(2, 8)) == 2
    assert chunk_ranges(0, 4) == [range(0, 0)]
