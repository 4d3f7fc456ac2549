"""Config file parsing and validation."""

import pytest

from gmvlab.config import RunConfig, load_config
from gmvlab.errors import InputError


def test_defaults_match_reference_setup():
    cfg = load_config(None)
    assert cfg.model.hidden_dims == (32, 16, 8)
    assert cfg.model.latent_dim == 2
    assert cfg.model.n_clusters == 2
    assert cfg.model.decoder_var == 1e-5
    assert cfg.model.beta == 0.1
    assert cfg.training.lr == 1e-3
    assert cfg.training.epochs == 20000
    assert cfg.training.batch_size == 64
    assert cfg.training.n_em == 1
    assert cfg.training.weight_decay == 0.0
    assert cfg.dataset.n_samples == 1280
    assert cfg.dataset.steps == 50
    assert cfg.metric.k == 10
    assert cfg.metric.r_percent == 20.0


def test_ini_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[dataset]\nn_samples = 100\nseed = 7\n"
        "[model]\nhidden_dims = 8, 4\nlatent_dim = 3\n"
        "[training]\nepochs = 10\nlr = 0.01\n"
        "[metric]\nk = 5\n"
    )
    cfg = load_config(path)
    assert cfg.dataset.n_samples == 100
    assert cfg.dataset.seed == 7
    assert cfg.model.hidden_dims == (8, 4)
    assert cfg.model.latent_dim == 3
    assert cfg.training.epochs == 10
    assert cfg.training.lr == 0.01
    assert cfg.metric.k == 5
    # untouched keys keep defaults
    assert cfg.training.batch_size == 64


def test_unknown_section_and_key_rejected(tmp_path):
    bad_section = tmp_path / "a.ini"
    bad_section.write_text("[mystery]\nx = 1\n")
    with pytest.raises(InputError, match="unknown section"):
        load_config(bad_section)
    bad_key = tmp_path / "b.ini"
    bad_key.write_text("[dataset]\nwhatever = 1\n")
    with pytest.raises(InputError, match="unknown key"):
        load_config(bad_key)


def test_bad_values_rejected(tmp_path):
    unparsable = tmp_path / "c.ini"
    unparsable.write_text("[training]\nepochs = soon\n")
    with pytest.raises(InputError, match="bad value"):
        load_config(unparsable)
    out_of_range = tmp_path / "d.ini"
    out_of_range.write_text("[model]\ndecoder_var = 0\n")
    with pytest.raises(InputError, match="decoder_var"):
        load_config(out_of_range)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_config(tmp_path / "nope.ini")


def test_validate_bounds_directly():
    cfg = RunConfig()
    cfg.metric.r_percent = 150.0
    with pytest.raises(InputError, match="r_percent"):
        cfg.validate()


def test_as_dict_is_json_friendly():
    import json

    blob = json.dumps(RunConfig().as_dict(), sort_keys=True)
    assert "hidden_dims" in blob
