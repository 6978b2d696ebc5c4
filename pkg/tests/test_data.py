import numpy as np
import pytest

from lai.data import (
    CsvFormatError,
    ScaleParams,
    SplitSpec,
    TimeSeries,
    generate_sinusoid,
    inject_point_outliers,
    load_csv,
    robust_scale,
    save_csv,
    split,
    subsample,
)
from oracles import interpolated_quantile


def write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_two_columns(self, tmp_path):
        series = load_csv(write(tmp_path, "index,value\n0,1.5\n1,2.5\n"))
        assert series.values.tolist() == [1.5, 2.5]
        assert series.start_index == 0
        assert series.labels is None

    def test_label_column(self, tmp_path):
        series = load_csv(write(tmp_path, "index,value,label\n0,1.0,0\n1,9.0,1\n"))
        assert series.labels.tolist() == [0, 1]

    def test_bad_value_names_row(self, tmp_path):
        path = write(tmp_path, "index,value\n0,abc\n")
        with pytest.raises(CsvFormatError, match="row 1"):
            load_csv(path)

    def test_non_finite_value(self, tmp_path):
        path = write(tmp_path, "index,value\n0,inf\n")
        with pytest.raises(CsvFormatError, match="non-finite"):
            load_csv(path)

    def test_bad_label(self, tmp_path):
        path = write(tmp_path, "index,value,label\n0,1.0,2\n")
        with pytest.raises(CsvFormatError, match="label"):
            load_csv(path)

    def test_inconsistent_columns(self, tmp_path):
        path = write(tmp_path, "index,value\n0,1.0\n1,2.0,1\n")
        with pytest.raises(CsvFormatError, match="row 2"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path):
        series = TimeSeries(
            np.array([0.25, -1.5, 3.75]), start_index=7, labels=np.array([0, 1, 0])
        )
        path = tmp_path / "rt.csv"
        save_csv(path, series)
        loaded = load_csv(path)
        assert np.array_equal(loaded.values, series.values)
        assert loaded.start_index == 7
        assert np.array_equal(loaded.labels, series.labels)


class TestTimeSeries:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([]))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([1.0, np.nan]))

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([1.0, 2.0]), labels=np.array([0, 2]))
        with pytest.raises(ValueError):
            TimeSeries(np.array([1.0, 2.0]), labels=np.array([0]))


class TestRobustScale:
    def test_one_to_five(self):
        scaled, params = robust_scale(TimeSeries(np.array([1.0, 2, 3, 4, 5])))
        assert params.median == 3.0
        assert params.iqr_scale == 2.0
        assert np.allclose(scaled.values, [-1.0, -0.5, 0.0, 0.5, 1.0], atol=1e-15)

    def test_matches_quantile_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            values = rng.normal(size=rng.integers(2, 40)) * rng.uniform(0.1, 50)
            _, params = robust_scale(TimeSeries(values))
            iqr = interpolated_quantile(values, 0.75) - interpolated_quantile(values, 0.25)
            assert params.median == pytest.approx(interpolated_quantile(values, 0.5), abs=1e-12)
            assert params.iqr_scale == pytest.approx(iqr if iqr > 0 else 1.0, abs=1e-12)

    def test_constant_series(self):
        scaled, params = robust_scale(TimeSeries(np.array([7.0, 7.0, 7.0])))
        assert params.iqr_scale == 1.0
        assert np.array_equal(scaled.values, [0.0, 0.0, 0.0])

    def test_single_point(self):
        scaled, params = robust_scale(TimeSeries(np.array([4.0])))
        assert params.median == 4.0
        assert scaled.values.tolist() == [0.0]

    def test_inverse_recovers_input(self):
        rng = np.random.default_rng(11)
        values = rng.normal(3.0, 10.0, size=200)
        scaled, params = robust_scale(TimeSeries(values))
        assert np.allclose(params.inverse(scaled.values), values, atol=1e-12)

    def test_scale_params_positive(self):
        with pytest.raises(ValueError):
            ScaleParams(median=0.0, iqr_scale=0.0)


class TestSplit:
    def test_forty_ten_fifty(self):
        series = TimeSeries(np.arange(10, dtype=float))
        train, val, test = split(series, SplitSpec(0.4, 0.1))
        assert (len(train), len(val), len(test)) == (4, 1, 5)
        assert val.start_index == 4
        assert test.start_index == 5

    def test_empty_val_is_legal(self):
        train, val, test = split(TimeSeries(np.arange(10.0)), SplitSpec(0.5, 0.0))
        assert val is None
        assert (len(train), len(test)) == (5, 5)

    def test_floor_arithmetic(self):
        train, val, test = split(TimeSeries(np.arange(4.0)), SplitSpec(0.5, 0.25))
        assert (len(train), len(val), len(test)) == (2, 1, 1)

    def test_preserves_order_and_length(self):
        rng = np.random.default_rng(2)
        values = rng.normal(size=37)
        labels = rng.integers(0, 2, size=37)
        train, val, test = split(TimeSeries(values, labels=labels), SplitSpec(0.4, 0.1))
        rebuilt = np.concatenate([train.values, val.values, test.values])
        assert np.array_equal(rebuilt, values)
        relabeled = np.concatenate([train.labels, val.labels, test.labels])
        assert np.array_equal(relabeled, labels)

    def test_empty_train_errors(self):
        with pytest.raises(ValueError, match="train"):
            split(TimeSeries(np.arange(4.0)), SplitSpec(0.1, 0.25))

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            SplitSpec(0.8, 0.3)
        with pytest.raises(ValueError):
            SplitSpec(0.0, 0.1)


class TestSubsample:
    def test_stride_two(self):
        out = subsample(TimeSeries(np.array([1.0, 2, 3, 4, 5])), 2)
        assert out.values.tolist() == [1.0, 3.0, 5.0]

    def test_identity(self):
        series = TimeSeries(np.arange(8.0), labels=np.zeros(8, dtype=np.int8))
        out = subsample(series, 1)
        assert np.array_equal(out.values, series.values)
        assert np.array_equal(out.labels, series.labels)

    def test_factor_ten(self):
        out = subsample(TimeSeries(np.arange(1.0, 21.0)), 10)
        assert out.values.tolist() == [1.0, 11.0]

    def test_zero_factor(self):
        with pytest.raises(ValueError):
            subsample(TimeSeries(np.arange(5.0)), 0)


class TestGenerateSinusoid:
    def test_noise_free_values(self):
        series = generate_sinusoid(4, 4.0, 1.0, 0.0, seed=0)
        assert np.allclose(series.values, [0.0, 1.0, 0.0, -1.0], atol=1e-12)
        assert series.labels.sum() == 0

    def test_deterministic(self):
        a = generate_sinusoid(100, 17.0, 2.0, 0.3, seed=9)
        b = generate_sinusoid(100, 17.0, 2.0, 0.3, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_noise_scale(self):
        n = 10000
        noisy = generate_sinusoid(n, 25.0, 1.0, 0.1, seed=3)
        clean = generate_sinusoid(n, 25.0, 1.0, 0.0, seed=3)
        assert 0.09 <= np.std(noisy.values - clean.values) <= 0.11

    def test_bad_args(self):
        with pytest.raises(ValueError):
            generate_sinusoid(0, 4.0)
        with pytest.raises(ValueError):
            generate_sinusoid(4, 0.0)
        with pytest.raises(ValueError):
            generate_sinusoid(4, 4.0, noise_std=-1.0)


class TestInjectPointOutliers:
    def test_count_at_paper_rate(self):
        series = generate_sinusoid(1000, 50.0, 1.0, 0.0, seed=0)
        out = inject_point_outliers(series, 0.004, 5.0, seed=1)
        assert int(out.labels.sum()) == 4
        assert int(np.sum(out.values != series.values)) == 4

    def test_zero_count_is_error(self):
        series = generate_sinusoid(100, 50.0, 1.0, 0.0, seed=0)
        with pytest.raises(ValueError):
            inject_point_outliers(series, 0.004, 5.0, seed=1)

    def test_spike_magnitude(self):
        series = generate_sinusoid(500, 50.0, 1.0, 0.05, seed=2)
        out = inject_point_outliers(series, 0.01, 3.5, seed=3)
        idx = np.flatnonzero(out.labels)
        assert np.allclose(np.abs(out.values[idx] - series.values[idx]), 3.5)
        untouched = np.flatnonzero(out.labels == 0)
        assert np.array_equal(out.values[untouched], series.values[untouched])

    def test_keeps_existing_labels(self):
        labels = np.zeros(200, dtype=np.int8)
        labels[5] = 1
        series = TimeSeries(np.zeros(200) + 1.0, labels=labels)
        out = inject_point_outliers(series, 0.01, 1.0, seed=4)
        assert out.labels[5] == 1
        # two injected plus the pre-existing label, minus a possible overlap
        assert int(out.labels.sum()) in (2, 3)

    def test_deterministic(self):
        series = generate_sinusoid(300, 30.0, 1.0, 0.1, seed=5)
        a = inject_point_outliers(series, 0.02, 4.0, seed=6)
        b = inject_point_outliers(series, 0.02, 4.0, seed=6)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)

    def test_bad_rate(self):
        series = generate_sinusoid(100, 10.0)
        with pytest.raises(ValueError):
            inject_point_outliers(series, 0.0, 1.0)
        with pytest.raises(ValueError):
            inject_point_outliers(series, 1.0, 1.0)
