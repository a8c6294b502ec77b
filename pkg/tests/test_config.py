import json

import pytest

from seeto.config import (
    OUTPUT_DIR_ENV,
    config_from_dict,
    load_config,
)
from seeto.errors import ConfigError


def test_defaults():
    cfg = config_from_dict({})
    assert cfg.family.n_source == 20
    assert cfg.family.n_target == 10
    assert cfg.family.outlier_targets == 3
    assert cfg.optimizer.fe_max == 60
    assert cfg.optimizer.n_p == 100
    assert cfg.optimizer.batch_size == 5
    assert cfg.optimizer.c_high == 0.038
    assert cfg.optimizer.c_low == 0.017
    assert cfg.modes == ("seeto", "baseline")
    assert cfg.seeds == tuple(range(10))
    assert cfg.reference_fe == 20
    assert cfg.hv_checkpoints == (20, 40, 60)


def test_partial_override_merges_with_defaults():
    cfg = config_from_dict(
        {"optimizer": {"fe_max": 80, "seed": 4}, "family": {"n_source": 5}}
    )
    assert cfg.optimizer.fe_max == 80
    assert cfg.optimizer.seed == 4
    assert cfg.optimizer.n_p == 100
    assert cfg.family.n_source == 5
    assert cfg.family.n_target == 10


def test_unknown_keys_are_rejected_with_path():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"optimizer": {"fe_maxx": 30}})
    assert "optimizer" in str(err.value)
    with pytest.raises(ConfigError):
        config_from_dict({"no_such_section": {}})


def test_type_errors_carry_dotted_path():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"family": {"n_source": "twenty"}})
    assert "family.n_source" in str(err.value)


def test_semantic_check_reference_budget():
    with pytest.raises(ConfigError) as err:
        config_from_dict(
            {
                "optimizer": {"fe_max": 15, "init_design": 8},
                "hv_checkpoints": [10, 15],
            }
        )
    assert "reference_fe" in str(err.value)
    cfg = config_from_dict(
        {
            "optimizer": {"fe_max": 15, "init_design": 8},
            "reference_fe": 10,
            "hv_checkpoints": [10, 15],
        }
    )
    assert cfg.optimizer.fe_max == 15


def test_semantic_check_checkpoints_within_budget():
    with pytest.raises(ConfigError):
        config_from_dict({"hv_checkpoints": [20, 40, 61]})


def test_semantic_check_outliers_within_targets():
    with pytest.raises(ConfigError):
        config_from_dict({"family": {"n_target": 2, "outlier_targets": 3}})


def test_semantic_check_latent_dim():
    with pytest.raises(ConfigError):
        config_from_dict({"family": {"latent_dim": 99}})


def test_optimizer_validation_is_applied():
    with pytest.raises(ConfigError):
        config_from_dict({"optimizer": {"rho": 2.0}})


def test_to_jsonable_round_trip():
    cfg = config_from_dict({"optimizer": {"kappa": 0.5}, "seeds": [0, 1, 2]})
    again = config_from_dict(json.loads(json.dumps(cfg.to_jsonable())))
    assert again == cfg


def test_load_config_file_and_errors(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"optimizer": {"fe_max": 40}, "hv_checkpoints": [20, 40]}))
    cfg = load_config(path)
    assert cfg.optimizer.fe_max == 40
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_output_dir_environment_override(tmp_path, monkeypatch):
    cfg = config_from_dict({"output_dir": "somewhere"})
    assert str(cfg.resolved_output_dir()) == "somewhere"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "forced"))
    assert cfg.resolved_output_dir() == tmp_path / "forced"
