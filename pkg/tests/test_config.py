import pytest

from somscreen import ConfigError
from somscreen.config import PipelineConfig, parse_config


class TestParseConfig:
    def test_defaults(self):
        config = parse_config("")
        assert config.sigma == 1.0
        assert config.learning_rate == 1.0
        assert config.topology == "hexagonal"
        assert config.iterations is None
        assert config.gate == "mean_plus_2std"
        assert config.folds == 5
        assert config.segmentation_threshold is None

    def test_all_keys(self):
        text = """
        # training block
        train.sigma0 = 0.5
        train.alpha0 = 0.25
        train.iterations = 1234
        train.topology = rect
        train.init = pca_plane
        train.sigma_decay = constant
        train.seed = 77
        segmentation.threshold = 0.9
        gate.mode = two_std
        cv.folds = 3
        bins = 0:1,1:2:mid
        """
        config = parse_config(text)
        assert config.sigma == 0.5
        assert config.learning_rate == 0.25
        assert config.iterations == 1234
        assert config.topology == "rectangular"
        assert config.init == "pca_plane"
        assert config.sigma_decay == "constant"
        assert config.seed == 77
        assert config.segmentation_threshold == 0.9
        assert config.gate == "two_std"
        assert config.folds == 3
        assert config.bins == (("0.0-1.0", 0.0, 1.0), ("mid", 1.0, 2.0))

    def test_otsu_threshold_keyword(self):
        config = parse_config("segmentation.threshold = otsu")
        assert config.segmentation_threshold is None

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 2.*unknown key"):
            parse_config("train.sigma0 = 1\ntrain.sigmaO = 2\n")

    def test_bad_syntax(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("train.sigma0: 1.0")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="expected a number"):
            parse_config("train.sigma0 = fast")
        with pytest.raises(ConfigError, match="folds"):
            parse_config("cv.folds = 1")
        with pytest.raises(ConfigError, match="gate.mode"):
            parse_config("gate.mode = always")
        with pytest.raises(ConfigError, match="topology"):
            parse_config("train.topology = circle")

    def test_overlapping_bins_rejected(self):
        with pytest.raises(ConfigError, match="overlap"):
            parse_config("bins = 0:2,1:3")

    def test_later_lines_override(self):
        config = parse_config("train.seed = 1\ntrain.seed = 2\n")
        assert config.seed == 2

    def test_som_params_mapping(self):
        config = PipelineConfig(sigma=0.7, learning_rate=0.3, iterations=50,
                                topology="rectangular", seed=9)
        params = config.som_params()
        assert params == {
            "n_iter": 50,
            "sigma": 0.7,
            "learning_rate": 0.3,
            "topology": "rectangular",
            "init": "random_uniform",
            "sigma_decay": "asymptotic",
            "random_state": 9,
        }
