import json

import pytest

from deccs.algorithm import DeccsConfig
from deccs.config import ConfigError, RunConfig, merge
from deccs.ensemble import default_ensemble


def test_defaults_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize("name", ["synth", "two_rings", "collision"])
def test_shipped_configs_load(name, tmp_path):
    cfg = RunConfig.load(f"configs/{name}.json")
    assert cfg.dataset.generator == name
    cfg.dump(tmp_path / "c.json")
    assert RunConfig.load(tmp_path / "c.json") == cfg


@pytest.mark.parametrize("blob", [
    {"bogus": 1},
    {"deccs": {"lambda_cons": 3}},
    {"dataset": {"generator": "synth", "params": {"n_per_ring": 3}}},
    {"dataset": {"generator": "nope"}},
    {"dataset": {"generator": None, "path": None}},
    {"autoencoder": {"hidden": [0]}},
    {"seeds": []},
    {"deccs": "fast"},
    [],
])
def test_invalid_configs_rejected(blob):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(blob)


def test_invalid_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(p)


def test_ensemble_build():
    cfg = RunConfig.from_dict({"ensemble": {"linkage": "ward"}})
    assert cfg.ensemble.build(3) == default_ensemble(3, linkage="ward")
    with pytest.raises(ConfigError):
        cfg.ensemble.build(None)
    explicit = RunConfig.from_dict({"ensemble": {"members": [
        {"algorithm": "kmeans", "k": 3}, {"algorithm": "gmm", "k": 2}]}})
    assert explicit.ensemble.build(None).ks == [3, 2]
    bad = RunConfig.from_dict({"ensemble": {"members": [{"algorithm": "kmeans", "kk": 3}]}})
    with pytest.raises(ConfigError):
        bad.ensemble.build(None)


def test_merge_and_sections():
    blob = merge({"deccs": {"max_rounds": 3, "seed": 1}}, {"deccs": {"max_rounds": 5}, "seeds": [4]})
    cfg = RunConfig.from_dict(blob)
    assert cfg.deccs == DeccsConfig(max_rounds=5, seed=1)
    assert cfg.seeds == [4]
