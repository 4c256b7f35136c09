import math

import numpy as np
import pytest

from fedt.errors import EmptyInputError, InvalidSampleError, TooShortError
from fedt.signals import (
    DatasetConfig,
    Label,
    RecordingMeta,
    TriaxialRecording,
    rms,
    rms_series,
    segment_adl,
    segment_fall,
)


def make_recording(samples, rate=50.0, label=None):
    return TriaxialRecording(
        "test/rec", samples, rate, RecordingMeta(dataset="test", label=label)
    )


class TestRms:
    @pytest.mark.parametrize(
        "sample,expected",
        [((3, 4, 0), 5.0), ((0, 0, 0), 0.0), ((1, 1, 1), math.sqrt(3))],
    )
    def test_known_values(self, sample, expected):
        assert rms(sample) == pytest.approx(expected, abs=1e-12)

    def test_zero_iff_all_zero(self):
        assert rms((0, 0, 0)) == 0.0
        assert rms((0, 1e-12, 0)) > 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidSampleError):
            rms((float("nan"), 0, 0))
        with pytest.raises(InvalidSampleError):
            rms((0, float("inf"), 0))

    def test_scale_homogeneous(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            v = rng.normal(0, 10, 3)
            c = float(rng.normal(0, 5))
            assert rms(c * v) == pytest.approx(abs(c) * rms(v), rel=1e-12)

    def test_axis_permutation_invariant(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            v = rng.normal(0, 10, 3)
            for perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1)):
                assert rms(v[list(perm)]) == pytest.approx(rms(v), rel=1e-12)


class TestRmsSeries:
    def test_composition(self):
        rec = make_recording([(3, 4, 0), (0, 0, 0)])
        assert rms_series(rec).tolist() == [5.0, 0.0]

    def test_single_sample(self):
        assert rms_series(make_recording([(1, 0, 0)])).tolist() == [1.0]

    def test_length_preserved(self):
        rng = np.random.default_rng(3)
        rec = make_recording(rng.normal(0, 1, (37, 3)))
        assert len(rms_series(rec)) == 37

    def test_matches_scalar_rms(self):
        rng = np.random.default_rng(4)
        samples = rng.normal(0, 5, (20, 3))
        series = rms_series(make_recording(samples))
        for i, row in enumerate(samples):
            assert series[i] == rms(row)

    def test_empty_recording_rejected_at_construction(self):
        with pytest.raises(EmptyInputError):
            make_recording(np.empty((0, 3)))


class TestSegmentFall:
    def peaked(self, n, peak_at, height=50.0):
        samples = np.zeros((n, 3))
        samples[:, 2] = 1.0
        samples[peak_at, 2] = height
        return make_recording(samples, label=Label.FALL)

    def test_centered_on_peak(self):
        w = segment_fall(self.peaked(10, 5), 4)
        assert w.origin.start == 3
        assert len(w) == 4
        assert w.label is Label.FALL

    def test_boundary_shifts_inward(self):
        w = segment_fall(self.peaked(10, 0), 4)
        assert w.origin.start == 0
        w = segment_fall(self.peaked(10, 9), 4)
        assert w.origin.start == 6

    def test_tie_breaks_to_first(self):
        samples = np.zeros((10, 3))
        samples[4, 0] = 7.0
        samples[7, 0] = 7.0
        w = segment_fall(make_recording(samples), 4)
        assert w.origin.start == 2  # centered on index 4

    def test_window_always_contains_peak(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(8, 60))
            ws = int(rng.integers(2, n + 1))
            samples = rng.normal(0, 1, (n, 3))
            rec = make_recording(samples)
            p = int(np.argmax(rms_series(rec)))
            w = segment_fall(rec, ws)
            assert w.origin.start <= p < w.origin.start + ws
            assert len(w) == ws

    def test_too_short(self):
        with pytest.raises(TooShortError):
            segment_fall(self.peaked(3, 1), 4)


class TestSegmentAdl:
    def test_stride_arithmetic(self):
        rec = make_recording(np.ones((10, 3)), label=Label.ADL)
        windows = segment_adl(rec, DatasetConfig(4, 2))
        assert [w.origin.start for w in windows] == [0, 2, 4, 6]
        assert all(w.label is Label.ADL for w in windows)

    def test_exact_fit(self):
        rec = make_recording(np.ones((4, 3)))
        assert len(segment_adl(rec, DatasetConfig(4, 1))) == 1

    def test_too_short_returns_empty(self):
        rec = make_recording(np.ones((3, 3)))
        assert segment_adl(rec, DatasetConfig(4, 2)) == []

    def test_window_count_formula(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(5, 200))
            ws = int(rng.integers(2, n + 1))
            stride = int(rng.integers(1, ws + 1))
            rec = make_recording(rng.normal(0, 1, (n, 3)))
            windows = segment_adl(rec, DatasetConfig(ws, stride))
            assert len(windows) == (n - ws) // stride + 1

    def test_adjacent_overlap(self):
        rec = make_recording(np.arange(30).reshape(10, 3).astype(float))
        windows = segment_adl(rec, DatasetConfig(4, 3))
        for a, b in zip(windows, windows[1:]):
            overlap = a.origin.start + 4 - b.origin.start
            assert overlap == 4 - 3
            np.testing.assert_array_equal(a.samples[3:], b.samples[:1])


class TestDatasetConfig:
    def test_paper_window_sizes(self):
        assert DatasetConfig.for_dataset("sisfall").window_size == 200
        assert DatasetConfig.for_dataset("mmsys").window_size == 100
        assert DatasetConfig.for_dataset("mobiact").window_size == 600
        assert DatasetConfig.for_dataset("practical").window_size == 300

    def test_stride_validation(self):
        with pytest.raises(InvalidSampleError):
            DatasetConfig(4, 0)
        with pytest.raises(InvalidSampleError):
            DatasetConfig(4, 5)


def test_recording_rejects_non_finite():
    with pytest.raises(InvalidSampleError):
        make_recording([(0, 0, float("nan"))])


def test_recording_rejects_bad_rate():
    with pytest.raises(InvalidSampleError):
        TriaxialRecording("r", [(0, 0, 1)], 0.0)
