import pytest
from pydantic import ValidationError

from models.configModel import PipelineConfig, load_config


def test_defaults():
    cfg = load_config()
    assert cfg.block_size == 60
    assert cfg.stride == 30
    assert cfg.knn_k == 3
    assert cfg.head_window == 200
    assert cfg.top_columns == 60
    assert cfg.top_rows == 7
    assert (cfg.canny_sigma, cfg.canny_lo, cfg.canny_hi) == (1.0, 0.1, 0.3)
    assert cfg.skin_frac == 0.25
    assert cfg.min_skin_area == 100
    assert cfg.classifier == "majority"
    assert cfg.selection == "all"


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    assert load_config(path) == PipelineConfig()


def test_file_values_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# tuned\nHEAD-WINDOW=150\nknn_k=5\nclassifier=tree\nscale=2\n")
    cfg = load_config(path, {"knn_k": 7, "stride": None})
    assert cfg.head_window == 150
    assert cfg.knn_k == 7
    assert cfg.stride == 30
    assert cfg.classifier == "tree"
    assert cfg.selection == 2


def test_classifier_alias_is_stored_as_tree(tmp_path):
    assert PipelineConfig(classifier="fig412").classifier == "tree"
    path = tmp_path / "run.cfg"
    path.write_text("classifier=fig412\n")
    assert load_config(path).classifier == "tree"


def test_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("window=3\n")
    with pytest.raises(ValueError, match="Unknown config keys: window"):
        load_config(path)


@pytest.mark.parametrize("overrides", [
    {"knn_k": 4},
    {"block_size": 0},
    {"canny_lo": 0.5, "canny_hi": 0.4},
    {"skin_frac": 1.5},
    {"classifier": "vote"},
    {"scale": "coarse"},
    {"threads": -1},
])
def test_invalid_values(overrides):
    with pytest.raises(ValueError, match="Invalid configuration"):
        load_config(overrides=overrides)


def test_config_is_frozen():
    cfg = PipelineConfig()
    with pytest.raises(ValidationError):
        cfg.block_size = 30
