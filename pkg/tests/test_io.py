import numpy as np
import pytest

from somscreen import (
    ModelFormatError,
    ScoreRecord,
    SelfOrganizingMap,
    SomOutlierDetector,
    load_model,
    read_patch,
    save_model,
    write_patch,
)
from somscreen.io import (
    read_features_csv,
    read_manifest,
    read_scores_csv,
    write_features_csv,
    write_manifest,
    write_scores_csv,
)


def fitted_som(seed=0, rows=3, cols=4, dim=5, topology="hexagonal"):
    rng = np.random.default_rng(seed)
    som = SelfOrganizingMap(rows=rows, cols=cols, n_iter=40, topology=topology,
                            random_state=seed)
    return som.fit(rng.normal(size=(30, dim)))


def fitted_detector(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 6)) * [5, 1, 2, 0.5, 1, 3]
    som = SelfOrganizingMap(rows=3, cols=3, n_iter=60, random_state=seed)
    return SomOutlierDetector(som=som).fit(X)


class TestModelFile:
    def test_bare_som_round_trip(self, tmp_path):
        som = fitted_som()
        path = tmp_path / "map.som"
        save_model(path, som)
        loaded = load_model(path)
        assert isinstance(loaded, SelfOrganizingMap)
        assert (loaded.rows_, loaded.cols_) == (som.rows_, som.cols_)
        assert loaded.topology == som.topology
        np.testing.assert_array_equal(loaded.weights_, som.weights_)

    def test_save_load_save_is_byte_identical(self, tmp_path):
        som = fitted_som(seed=3, topology="rectangular")
        first = tmp_path / "a.som"
        second = tmp_path / "b.som"
        save_model(first, som)
        save_model(second, load_model(first))
        assert first.read_bytes() == second.read_bytes()

    def test_detector_round_trip(self, tmp_path):
        detector = fitted_detector(seed=5)
        path = tmp_path / "model.som"
        save_model(path, detector)
        loaded = load_model(path)
        assert isinstance(loaded, SomOutlierDetector)
        assert loaded.threshold_ == detector.threshold_
        np.testing.assert_array_equal(loaded.normalizer_.min_, detector.normalizer_.min_)
        np.testing.assert_array_equal(loaded.normalizer_.max_, detector.normalizer_.max_)
        assert loaded.feature_names_ == detector.feature_names_
        rng = np.random.default_rng(8)
        X = rng.normal(size=(10, 6))
        np.testing.assert_array_equal(
            loaded.quantization_errors(X), detector.quantization_errors(X)
        )

    def test_header_layout(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_som(rows=2, cols=2, dim=3))
        lines = path.read_text().splitlines()
        assert lines[0] == "SOMODEL v1"
        assert lines[1] == "topology hex"
        assert lines[2] == "rows 2"
        assert lines[3] == "cols 2"
        assert lines[4] == "dim 3"
        assert len(lines) == 5 + 4
        assert all(len(line.split(",")) == 3 for line in lines[5:])

    @pytest.mark.parametrize(
        "mutate,match",
        [
            (lambda t: t.replace("SOMODEL v1", "SOMODEL v2"), "header"),
            (lambda t: t.replace("topology hex", "topology octo"), "topology"),
            (lambda t: t.replace("rows 3", "rows x"), "header"),
            (lambda t: "\n".join(t.splitlines()[:-2]) + "\n", "weight lines"),
        ],
    )
    def test_malformed_files_rejected(self, tmp_path, mutate, match):
        path = tmp_path / "model.som"
        save_model(path, fitted_som())
        path.write_text(mutate(path.read_text()))
        with pytest.raises(ModelFormatError, match=match):
            load_model(path)

    def test_wrong_value_count_per_weight_line(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_som(rows=2, cols=2, dim=3))
        lines = path.read_text().splitlines()
        lines[5] = "1.0,2.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ModelFormatError, match="line 6"):
            load_model(path)

    def test_unknown_trailing_section(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_som())
        path.write_text(path.read_text() + "flavor vanilla\n")
        with pytest.raises(ModelFormatError, match="unknown section"):
            load_model(path)

    def test_incomplete_detector_sections(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_som(dim=6))
        path.write_text(path.read_text() + "threshold 0.5\n")
        with pytest.raises(ModelFormatError, match="incomplete detector sections"):
            load_model(path)

    def test_features_alone_rejected(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_som(dim=6))
        path.write_text(path.read_text() + "features a,b,c,d,e,f\n")
        with pytest.raises(ModelFormatError, match="features"):
            load_model(path)

    def test_duplicate_section_rejected(self, tmp_path):
        path = tmp_path / "model.som"
        save_model(path, fitted_detector())
        path.write_text(path.read_text() + "threshold 0.5\n")
        with pytest.raises(ModelFormatError, match="duplicate"):
            load_model(path)

    def test_unfitted_model_rejected(self, tmp_path):
        with pytest.raises(Exception):
            save_model(tmp_path / "x.som", SelfOrganizingMap())
        with pytest.raises(TypeError):
            save_model(tmp_path / "x.som", object())


class TestPatchFile:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(10)
        patch = rng.normal(size=(50, 50)) * 1e-3
        path = tmp_path / "patch.txt"
        write_patch(path, patch)
        np.testing.assert_array_equal(read_patch(path), patch)

    def test_write_then_write_identical(self, tmp_path):
        rng = np.random.default_rng(11)
        patch = rng.normal(size=(50, 50))
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        write_patch(a, patch)
        write_patch(b, read_patch(a))
        assert a.read_bytes() == b.read_bytes()

    def test_wrong_line_length(self, tmp_path):
        path = tmp_path / "patch.txt"
        path.write_text("1.0 2.0\n")
        with pytest.raises(ValueError, match="line 1"):
            read_patch(path)

    def test_wrong_line_count(self, tmp_path):
        path = tmp_path / "patch.txt"
        path.write_text("\n".join(" ".join(["0.0"] * 50) for _ in range(10)) + "\n")
        with pytest.raises(ValueError, match="expected 50 lines"):
            read_patch(path)

    def test_wrong_shape_rejected_on_write(self, tmp_path):
        with pytest.raises(ValueError):
            write_patch(tmp_path / "p.txt", np.zeros((10, 10)))


class TestManifest:
    def test_round_trip(self, tmp_path):
        rows = [("a.txt", "s0", "inlier"), ("b.txt", "s1", None)]
        path = tmp_path / "manifest.csv"
        write_manifest(path, rows)
        assert read_manifest(path) == rows

    def test_header_checked(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text("file,name,tag\na,b,c\n")
        with pytest.raises(ValueError, match="header"):
            read_manifest(path)


class TestFeaturesCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(7, 6)) * 100
        ids = [f"s{i}" for i in range(7)]
        labels = ["inlier" if i % 2 else None for i in range(7)]
        path = tmp_path / "features.csv"
        write_features_csv(path, ids, labels, X)
        got_ids, got_labels, got_X = read_features_csv(path)
        assert got_ids == ids
        assert got_labels == labels
        np.testing.assert_array_equal(got_X, X)

    def test_empty_file_round_trip(self, tmp_path):
        path = tmp_path / "features.csv"
        write_features_csv(path, [], [], np.empty((0, 6)))
        ids, labels, X = read_features_csv(path)
        assert ids == [] and labels == [] and X.shape == (0, 6)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "features.csv"
        write_features_csv(path, ["a", "b"], [None, None], np.ones((2, 6)))
        text = path.read_text().splitlines()
        text[2] = "b,,1.0,bad,1.0,1.0,1.0,1.0"
        path.write_text("\n".join(text) + "\n")
        with pytest.raises(ValueError, match="line 3"):
            read_features_csv(path)

    def test_field_count_error(self, tmp_path):
        path = tmp_path / "features.csv"
        write_features_csv(path, ["a"], [None], np.ones((1, 6)))
        path.write_text(path.read_text() + "extra,row\n")
        with pytest.raises(ValueError, match="line 3"):
            read_features_csv(path)

    def test_header_error(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("id,label,a,b,c,d,e,f\n")
        with pytest.raises(ValueError, match="header"):
            read_features_csv(path)


class TestScoresCsv:
    def test_round_trip(self, tmp_path):
        records = [
            ScoreRecord("s0", "inlier", 0.05, 1, 2, "inlier", "0.0-0.1"),
            ScoreRecord("s1", None, 3.5, 0, 0, "outlier", "3.0-4.0"),
        ]
        path = tmp_path / "scores.csv"
        write_scores_csv(path, records)
        assert read_scores_csv(path) == records

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "scores.csv"
        write_scores_csv(path, [ScoreRecord("a", None, 0.1, 0, 0, "inlier", "0.0-0.1")])
        path.write_text(path.read_text().replace("0,0,inlier", "0,x,inlier"))
        with pytest.raises(ValueError, match="line 2"):
            read_scores_csv(path)
