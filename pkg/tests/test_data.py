import numpy as np
import pytest

from discret2di.data import (
    DataError,
    TimeSeries,
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    load_csv,
    save_csv,
    split_train_val,
)


def make_ts(values, channels=None):
    values = np.asarray(values, dtype=np.float64)
    channels = channels or [f"c{i}" for i in range(values.shape[1])]
    return TimeSeries(np.arange(len(values)), tuple(channels), values)


class TestTimeSeries:
    def test_row_count_mismatch_rejected(self):
        with pytest.raises(DataError):
            TimeSeries(np.arange(3), ("a",), np.zeros((2, 1)))

    def test_channel_count_mismatch_rejected(self):
        with pytest.raises(DataError):
            TimeSeries(np.arange(2), ("a", "b"), np.zeros((2, 1)))

    def test_decreasing_timestamps_rejected(self):
        with pytest.raises(DataError):
            TimeSeries(np.array([0, 0]), ("a",), np.zeros((2, 1)))

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            make_ts([[0.0], [np.nan]])

    def test_values_read_only(self):
        ts = make_ts([[1.0], [2.0]])
        with pytest.raises(ValueError):
            ts.values[0, 0] = 5.0

    def test_select_reorders_channels(self):
        ts = make_ts([[1.0, 2.0], [3.0, 4.0]], ["a", "b"])
        sel = ts.select(["b", "a"])
        assert sel.channels == ("b", "a")
        assert sel.values[0].tolist() == [2.0, 1.0]


class TestLoadCsv:
    def test_time_column_parsed(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("time,h1\n0,1.5\n1,1.6\n")
        ts = load_csv(p)
        assert len(ts) == 2
        assert ts.channels == ("h1",)
        assert ts.timestamps.tolist() == [0, 1]
        assert ts.values[:, 0].tolist() == [1.5, 1.6]

    def test_synthetic_index_without_time_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n3,4\n5,6\n")
        ts = load_csv(p)
        assert ts.timestamps.tolist() == [0, 1, 2]
        assert ts.channels == ("a", "b")

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("time,h1\n0,abc\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv")

    def test_decreasing_timestamps(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("time,h1\n1,0\n0,0\n")
        with pytest.raises(DataError, match="decreasing"):
            load_csv(p)

    def test_schema_mismatch(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("time,h1\n0,1\n")
        with pytest.raises(DataError, match="schema"):
            load_csv(p, schema=["h1", "h2"])

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        ts = make_ts(rng.standard_normal((50, 4)) * 10.0 ** rng.integers(-8, 8, (50, 4)))
        p = tmp_path / "r.csv"
        save_csv(ts, p)
        back = load_csv(p)
        assert back.channels == ts.channels
        assert np.array_equal(back.timestamps, ts.timestamps)
        assert np.array_equal(back.values, ts.values)


class TestStandardizer:
    def test_two_point_channel(self):
        std = fit_standardizer(make_ts([[0.0], [2.0]]))
        assert std.mean[0] == 1.0
        assert std.std[0] == pytest.approx(np.sqrt(2.0), rel=1e-12)

    def test_constant_channel_gets_unit_std(self):
        std = fit_standardizer(make_ts([[5.0], [5.0], [5.0]]))
        assert std.mean[0] == 5.0
        assert std.std[0] == 1.0

    def test_hand_computed_sample_std(self):
        # deviations (-1, 0, 1), sum of squares 2, / (N-1) = 1, sqrt = 1
        std = fit_standardizer(make_ts([[1.0], [2.0], [3.0]]))
        assert std.mean[0] == pytest.approx(2.0, abs=1e-15)
        assert std.std[0] == pytest.approx(1.0, abs=1e-15)

    def test_single_row_rejected(self):
        with pytest.raises(DataError):
            fit_standardizer(make_ts([[1.0]]))

    def test_apply_anchor(self):
        std = fit_standardizer(make_ts([[0.0], [2.0]]))  # mean 1
        out = apply_standardizer(std, make_ts([[3.0]] * 2))
        assert out.values[0, 0] == pytest.approx((3.0 - 1.0) / np.sqrt(2.0), rel=1e-12)

    def test_identity_when_mean0_std1(self):
        base = make_ts([[-1.0], [1.0], [0.0]])
        std = fit_standardizer(base)
        assert std.mean[0] == pytest.approx(0.0, abs=1e-15)
        assert std.std[0] == pytest.approx(1.0, rel=1e-15)

    def test_roundtrip_within_1e9(self):
        rng = np.random.default_rng(11)
        ts = make_ts(rng.standard_normal((100, 3)) * [1.0, 50.0, 1e-3] + [0, 7, -2])
        std = fit_standardizer(ts)
        back = invert_standardizer(std, apply_standardizer(std, ts))
        assert np.allclose(back.values, ts.values, rtol=1e-9, atol=1e-12)

    def test_standardized_train_has_zero_mean_unit_std(self):
        rng = np.random.default_rng(4)
        ts = make_ts(rng.standard_normal((500, 2)) * [3.0, 0.2] + [10.0, -4.0])
        out = apply_standardizer(fit_standardizer(ts), ts)
        assert np.allclose(out.values.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(out.values.std(axis=0, ddof=1), 1.0, atol=1e-9)

    def test_channel_mismatch(self):
        std = fit_standardizer(make_ts([[0.0], [1.0]], ["a"]))
        with pytest.raises(DataError, match="channel mismatch"):
            apply_standardizer(std, make_ts([[0.0], [1.0]], ["b"]))


class TestSplit:
    def test_paper_sized_split(self):
        ts = make_ts(np.zeros((5000, 1)))
        tr, va = split_train_val(ts, 0.7, seed=0)
        assert (len(tr), len(va)) == (3500, 1500)

    def test_deterministic(self):
        ts = make_ts(np.arange(10, dtype=float)[:, None])
        a = split_train_val(ts, 0.5, seed=9)
        b = split_train_val(ts, 0.5, seed=9)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].values, b[1].values)

    def test_floor_rule(self):
        ts = make_ts(np.zeros((4, 1)))
        tr, va = split_train_val(ts, 0.75, seed=1)
        assert (len(tr), len(va)) == (3, 1)

    def test_disjoint_union(self):
        ts = make_ts(np.arange(37, dtype=float)[:, None])
        tr, va = split_train_val(ts, 0.6, seed=2)
        merged = sorted(tr.values[:, 0].tolist() + va.values[:, 0].tolist())
        assert merged == list(range(37))

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            split_train_val(make_ts(np.zeros((1, 1))), 0.5, seed=0)
