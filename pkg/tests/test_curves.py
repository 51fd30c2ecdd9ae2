import numpy as np
import pytest

from elastika.curves import (
    Curve,
    Dataset,
    RawTrial,
    load_dataset,
    load_raw_trials,
    normalize_time,
    preprocess_trials,
    save_dataset,
    trim_zeros,
    uniform_grid,
)
from elastika.errors import (
    AllZeroChannel,
    InvariantViolation,
    ParseError,
    SchemaError,
    TooFewSamples,
)


def raw(samples, channels=("vGRF",), trial_id="t1", subject_id="s1"):
    return RawTrial(
        trial_id=trial_id,
        subject_id=subject_id,
        channels=channels,
        samples=np.atleast_2d(np.asarray(samples, dtype=float)),
    )


class TestTrimZeros:
    def test_basic_padding(self):
        out = trim_zeros(raw([0, 0, 0, 1, 2, 1, 0, 0]))
        np.testing.assert_array_equal(out.samples[0], [0, 1, 2, 1, 0])

    def test_no_padding_clamps(self):
        out = trim_zeros(raw([1, 2, 1, 2]))
        np.testing.assert_array_equal(out.samples[0], [1, 2, 1, 2])

    def test_all_channels_cut_together(self):
        t = raw(
            [[0, 0, 1, 2, 0, 0], [5, 6, 7, 8, 9, 10]],
            channels=("vGRF", "apGRF"),
        )
        out = trim_zeros(t, "vGRF")
        np.testing.assert_array_equal(out.samples[0], [0, 1, 2, 0])
        np.testing.assert_array_equal(out.samples[1], [6, 7, 8, 9])

    def test_matches_exhaustive_scan_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = rng.integers(4, 40)
            x = rng.uniform(0, 1, n) * (rng.uniform(0, 1, n) > 0.3)
            lead, tail = rng.integers(0, 5, 2)
            padded = np.concatenate([np.zeros(lead), x, np.zeros(tail)])
            if np.all(np.abs(padded) < 1e-9):
                continue
            # oracle: exhaustive scan for first/last nonzero
            nz = [i for i in range(padded.size) if abs(padded[i]) >= 1e-9]
            lo, hi = max(nz[0] - 1, 0), min(nz[-1] + 1, padded.size - 1)
            out = trim_zeros(raw(padded))
            np.testing.assert_array_equal(out.samples[0], padded[lo : hi + 1])

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.uniform(0, 1, 30) * (rng.uniform(0, 1, 30) > 0.4)
            x[:3] = 0.0
            x[-2:] = 0.0
            if np.all(np.abs(x) < 1e-9):
                continue
            once = trim_zeros(raw(x))
            twice = trim_zeros(once)
            np.testing.assert_array_equal(once.samples, twice.samples)

    def test_all_zero_raises(self):
        with pytest.raises(AllZeroChannel):
            trim_zeros(raw([0.0, 0.0, 0.0, 0.0]))

    def test_zero_tolerance(self):
        out = trim_zeros(raw([1e-12, 1e-12, 0.5, 1e-12, 1e-12]), zero_tol=1e-9)
        np.testing.assert_array_equal(out.samples[0], [1e-12, 0.5, 1e-12])


def pl_interp_oracle(x, xp, fp):
    """Direct piecewise-linear interpolation, written independently."""
    out = np.empty(x.size)
    for i, xv in enumerate(x):
        if xv <= xp[0]:
            out[i] = fp[0]
            continue
        if xv >= xp[-1]:
            out[i] = fp[-1]
            continue
        j = int(np.searchsorted(xp, xv, side="right")) - 1
        w = (xv - xp[j]) / (xp[j + 1] - xp[j])
        out[i] = (1 - w) * fp[j] + w * fp[j + 1]
    return out


class TestNormalizeTime:
    def test_line_resampled(self):
        c = normalize_time(raw([0.0, 4.0]), grid_length=5)
        np.testing.assert_allclose(c.values[0], [0, 1, 2, 3, 4], atol=1e-14)
        assert c.grid[0] == 0.0 and c.grid[-1] == 1.0

    def test_identity_resampling(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(25)
        c = normalize_time(raw(x), grid_length=25)
        np.testing.assert_allclose(c.values[0], x, atol=1e-12)

    def test_matches_interp_oracle(self):
        k = np.arange(101)
        x = np.sin(2 * np.pi * k / 100)
        c = normalize_time(raw(x), grid_length=201)
        expected = pl_interp_oracle(uniform_grid(201), uniform_grid(101), x)
        np.testing.assert_allclose(c.values[0], expected, atol=1e-12)

    def test_endpoints_exact(self):
        x = np.array([3.7, 1.0, -2.0, 5.5])
        c = normalize_time(raw(x), grid_length=17)
        assert c.values[0, 0] == 3.7
        assert c.values[0, -1] == 5.5

    def test_too_few_samples(self):
        t = RawTrial("t", "s", ("vGRF",), np.array([[1.0]]))
        with pytest.raises(TooFewSamples):
            normalize_time(t, 10)

    def test_extrema_within_lipschitz_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = rng.integers(20, 80)
            x = np.cumsum(rng.standard_normal(n))
            m = rng.integers(10, 200)
            c = normalize_time(raw(x), grid_length=m)
            lip = np.max(np.abs(np.diff(x))) * (n - 1)  # slope on the unit interval
            spacing = 1.0 / (m - 1)
            assert abs(c.values[0].max() - x.max()) <= lip * spacing + 1e-12
            assert abs(c.values[0].min() - x.min()) <= lip * spacing + 1e-12


def two_curve_csv(path):
    header = "subject_id,trial_id,channel,index,time,value\n"
    rows = []
    grid = uniform_grid(5)
    for tid, scale in (("t1", 1.0), ("t2", 2.0)):
        for ch, off in (("vGRF", 0.0), ("apGRF", 10.0)):
            for i, t in enumerate(grid):
                rows.append(f"s1,{tid},{ch},{i},{t},{scale * i + off}\n")
    path.write_text(header + "".join(rows))


class TestDatasetIO:
    def test_two_curve_fixture(self, tmp_path):
        p = tmp_path / "two.csv"
        two_curve_csv(p)
        ds = load_dataset(p)
        assert ds.n_curves == 2
        assert set(ds.subjects) == {"s1"}
        assert ds.channels == ("vGRF", "apGRF")

    def test_ragged_channels_schema_error(self, tmp_path):
        p = tmp_path / "ragged.csv"
        lines = ["subject_id,trial_id,channel,index,time,value"]
        for i in range(5):
            lines.append(f"s1,t1,vGRF,{i},{i / 4},{i}")
        for i in range(4):
            lines.append(f"s1,t1,apGRF,{i},{i / 3},{i}")
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError):
            load_dataset(p)

    def test_missing_column_schema_error(self, tmp_path):
        p = tmp_path / "missing.csv"
        p.write_text("subject_id,trial_id,channel,index,value\ns1,t1,vGRF,0,1\n")
        with pytest.raises(SchemaError):
            load_dataset(p)

    def test_malformed_value_parse_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(
            "subject_id,trial_id,channel,index,time,value\ns1,t1,vGRF,0,0.0,oops\n"
        )
        with pytest.raises(ParseError):
            load_dataset(p)

    @pytest.mark.parametrize("format", ["csv", "jsonl"])
    def test_save_load_round_trip(self, tmp_path, format):
        rng = np.random.default_rng(7)
        grid = uniform_grid(31)
        curves = tuple(
            Curve(
                trial_id=f"t{i}",
                subject_id=f"s{i % 3}",
                channels=("vGRF", "apGRF", "mlGRF"),
                grid=grid,
                values=rng.standard_normal((3, 31)),
            )
            for i in range(6)
        )
        ds = Dataset(curves=curves)
        p = tmp_path / f"ds.{format}"
        save_dataset(ds, p, format)
        back = load_dataset(p, format)
        assert back.n_curves == 6
        for a, b in zip(ds.curves, back.curves):
            assert a.trial_id == b.trial_id
            assert a.subject_id == b.subject_id
            assert a.channels == b.channels
            np.testing.assert_allclose(a.values, b.values, rtol=1e-12, atol=0)

    def test_load_raw_trials_lengths_vary(self, tmp_path):
        p = tmp_path / "raw.csv"
        lines = ["subject_id,trial_id,channel,index,time,value"]
        for i in range(8):
            lines.append(f"s1,t1,vGRF,{i},{i / 480},{max(0, 4 - abs(i - 4))}")
        for i in range(12):
            lines.append(f"s2,t2,vGRF,{i},{i / 480},{max(0, 6 - abs(i - 6))}")
        p.write_text("\n".join(lines) + "\n")
        trials = load_raw_trials(p)
        assert [t.n_samples for t in trials] == [8, 12]
        ds = preprocess_trials(trials, grid_length=21)
        assert all(c.grid.size == 21 for c in ds.curves)

    def test_jsonl_schema_error(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"subject_id": "s1", "trial_id": "t1"}\n')
        with pytest.raises(SchemaError):
            load_dataset(p, "jsonl")


class TestInvariants:
    def test_uneven_grid_rejected(self):
        grid = np.array([0.0, 0.2, 0.5, 1.0])
        c = Curve("t", "s", ("x",), grid, np.zeros((1, 4)))
        with pytest.raises(InvariantViolation):
            c.validate()

    def test_nonfinite_rejected(self):
        c = Curve("t", "s", ("x",), uniform_grid(4), np.array([[0.0, 1.0, np.nan, 2.0]]))
        with pytest.raises(InvariantViolation):
            c.validate()

    def test_mixed_grids_rejected(self):
        a = Curve("a", "s", ("x",), uniform_grid(5), np.zeros((1, 5)))
        b = Curve("b", "s", ("x",), uniform_grid(7), np.zeros((1, 7)))
        with pytest.raises(InvariantViolation):
            Dataset(curves=(a, b)).validate()

    def test_duplicate_channels_rejected(self):
        t = RawTrial("t", "s", ("x", "x"), np.zeros((2, 5)))
        with pytest.raises(InvariantViolation):
            t.validate()
