import json

import numpy as np
import pytest

from cfris.channel import LinkKind
from cfris.config import (
    ScenarioConfig,
    SurfaceSpec,
    config_from_dict,
    config_hash,
    config_to_dict,
    dbm_to_watt,
    parse_config,
    serialize_config,
)
from cfris.errors import ConfigError

MINIMAL = {
    "aps": 4,
    "ap_antennas": 2,
    "users": 4,
    "user_antennas": 2,
    "surfaces": [{"elements": 32, "architecture": "fc"}],
}


def test_dbm_to_watt_frozen_values():
    assert dbm_to_watt(16.0) == pytest.approx(0.039810717055349734, rel=1e-14)
    assert dbm_to_watt(-80.0) == pytest.approx(1e-11, rel=1e-14)
    assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-14)


def test_defaults():
    cfg = config_from_dict(MINIMAL)
    assert cfg.p_max_dbm == 16.0
    assert cfg.noise_dbm == -80.0
    assert cfg.carrier_ghz == 2.4
    assert cfg.dist_surface_to_user == 2.5
    assert cfg.dist_ap_to_surface == 50.0
    assert cfg.dist_ap_to_user == 51.0
    assert cfg.rician_ap_to_surface_db == 9.0
    assert cfg.include_direct is True
    assert cfg.trials == 50
    assert cfg.baselines == ("mmse", "pa")
    # equal power split over APs
    assert np.allclose(cfg.p_ap_w, np.full(4, cfg.p_max_w / 4))
    assert cfg.n0_w == pytest.approx(1e-11)
    links = cfg.links()
    assert links[LinkKind.AP_TO_USER].rician_db is None


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ConfigError, match="bogus"):
        config_from_dict({**MINIMAL, "bogus": 1})
    with pytest.raises(ConfigError, match=r"surfaces\[0\]"):
        config_from_dict({**MINIMAL, "surfaces": [{"elements": 32, "foo": 1}]})
    with pytest.raises(ConfigError, match="distances_m"):
        config_from_dict({**MINIMAL, "distances_m": {"nope": 1.0}})
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict({"aps": 2})
    with pytest.raises(ConfigError, match="baseline"):
        config_from_dict({**MINIMAL, "baselines": ["zf"]})


def test_surface_architecture_validation():
    with pytest.raises(ConfigError):
        config_from_dict({**MINIMAL, "surfaces": [{"elements": 32, "architecture": "gc3"}]})
    cfg = config_from_dict({**MINIMAL, "surfaces": [{"elements": 32, "architecture": "gc4"}]})
    assert cfg.surfaces[0].arch().group_size == 4


def test_round_trip_and_hash(tmp_path):
    raw = {
        **MINIMAL,
        "p_max_dbm": 10.0,
        "trials": 7,
        "master_seed": 3,
        "include_direct": False,
        "distances_m": {"ap_to_surface": 40.0},
    }
    cfg = config_from_dict(raw)
    path = tmp_path / "cfg.json"
    path.write_text(serialize_config(cfg))
    cfg2 = parse_config(path)
    assert cfg2 == cfg
    assert config_hash(cfg2) == config_hash(cfg)
    # hash is sensitive to any field change
    assert config_hash(cfg.with_p_max(12.0)) != config_hash(cfg)
    assert json.loads(serialize_config(cfg)) == config_to_dict(cfg)


def test_parse_config_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(path)


def test_per_ap_power_override():
    cfg = config_from_dict({**MINIMAL, "per_ap_power_dbm": [10.0, 10.0, 13.0, 13.0]})
    assert np.allclose(
        cfg.p_ap_w, [dbm_to_watt(10), dbm_to_watt(10), dbm_to_watt(13), dbm_to_watt(13)]
    )
    with pytest.raises(ConfigError):
        config_from_dict({**MINIMAL, "per_ap_power_dbm": [10.0]})


def test_with_architecture():
    cfg = config_from_dict(MINIMAL).with_architecture("sc")
    assert all(s.architecture == "sc" for s in cfg.surfaces)


def test_scenario_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(aps=0, ap_antennas=2, users=2, user_antennas=2,
                       surfaces=(SurfaceSpec(8, "sc"),))
