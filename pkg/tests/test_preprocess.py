import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eigengestures import (
    RawRecording,
    assemble_tensor,
    flatten,
    integrate_acceleration,
    integrate_recording,
    integrate_tensor,
    preprocess_corpus,
    resample,
    studentise,
    unflatten,
    unflatten_column,
)
from eigengestures.dataset import ACCEL_CHANNELS, NUM_SENSORS
from eigengestures.errors import (
    BadTarget,
    DataError,
    DegenerateSensor,
    DuplicateRealisation,
    MissingRealisation,
    NotStudentised,
    UnknownRealisation,
)
from eigengestures.preprocess import GestureTensor, dump_data_matrix


def _recording(samples, gesture_id=1, performer_id=1, repetition=1):
    return RawRecording(
        gesture_id=gesture_id,
        performer_id=performer_id,
        repetition=repetition,
        tempo="normal",
        samples=samples,
    )


def _gesture(values, gesture_id=1, realisation=1, integrated=False):
    rec = _recording(np.zeros((2, NUM_SENSORS)), gesture_id=gesture_id)
    g = resample(rec, values.shape[0])
    return dataclasses.replace(
        g, values=values, realisation=realisation, integrated=integrated
    )


def _channel_recording(channel_values):
    """A recording whose channel 0 carries the given samples, rest zero."""
    samples = np.zeros((len(channel_values), NUM_SENSORS))
    samples[:, 0] = channel_values
    return _recording(samples)


class TestResample:
    def test_linear_signal_fixed_point(self):
        out = resample(_channel_recording([0.0, 1.0]), 4)
        assert np.allclose(out.values[:, 0], [0.0, 1 / 3, 2 / 3, 1.0], atol=1e-15)

    def test_identity_grid(self, rng):
        samples = rng.standard_normal((6, NUM_SENSORS))
        out = resample(_recording(samples), 6)
        assert np.array_equal(out.values, samples)

    def test_tent_example(self):
        out = resample(_channel_recording([0.0, 2.0, 0.0]), 5)
        assert np.allclose(out.values[:, 0], [0.0, 1.0, 2.0, 1.0, 0.0], atol=1e-15)

    def test_target_too_small(self):
        with pytest.raises(BadTarget):
            resample(_channel_recording([0.0, 1.0]), 1)

    def test_endpoints_bit_exact(self, rng):
        samples = rng.standard_normal((9, NUM_SENSORS)) * 1e3
        out = resample(_recording(samples), 17)
        assert np.array_equal(out.values[0], samples[0])
        assert np.array_equal(out.values[-1], samples[-1])

    @given(
        st.integers(min_value=2, max_value=40),
        st.integers(min_value=2, max_value=40),
        st.integers(min_value=0, max_value=2**31),
    )
    def test_affine_invariance(self, n_in, n_out, seed):
        rng = np.random.default_rng(seed)
        slope, intercept = rng.standard_normal(2) * 5
        t = np.linspace(0.0, 1.0, n_in)
        samples = np.tile((slope * t + intercept)[:, None], (1, NUM_SENSORS))
        out = resample(_recording(samples), n_out)
        expected = slope * np.linspace(0.0, 1.0, n_out) + intercept
        assert np.max(np.abs(out.values - expected[:, None])) < 1e-12

    @given(
        st.integers(min_value=2, max_value=30),
        st.integers(min_value=2, max_value=30),
        st.integers(min_value=0, max_value=2**31),
    )
    def test_monotone_preserved(self, n_in, n_out, seed):
        rng = np.random.default_rng(seed)
        increasing = np.cumsum(rng.random(n_in))
        out = resample(_channel_recording(increasing), n_out)
        assert np.all(np.diff(out.values[:, 0]) >= 0.0)


class TestIntegration:
    def test_zero_stays_zero(self):
        g = resample(_recording(np.zeros((4, NUM_SENSORS))), 4)
        out = integrate_acceleration(g, dt=1.0)
        assert not out.values.any()
        assert out.integrated

    def test_unit_accel_example(self):
        samples = np.zeros((3, NUM_SENSORS))
        samples[:, 5] = 1.0
        g = resample(_recording(samples), 3)
        out = integrate_acceleration(g, dt=1.0)
        assert np.allclose(out.values[:, 5], [1.0, 3.0, 6.0])

    def test_non_accel_channels_untouched(self, rng):
        samples = rng.standard_normal((8, NUM_SENSORS))
        g = resample(_recording(samples), 8)
        out = integrate_acceleration(g, dt=0.25)
        for s in list(range(5)) + [8, 9]:
            assert np.array_equal(out.values[:, s], g.values[:, s])

    def test_double_integration_rejected(self):
        g = resample(_recording(np.zeros((3, NUM_SENSORS))), 3)
        with pytest.raises(DataError):
            integrate_acceleration(integrate_acceleration(g))

    @given(st.integers(min_value=0, max_value=2**31))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((7, NUM_SENSORS))
        b = rng.standard_normal((7, NUM_SENSORS))
        alpha, beta = rng.standard_normal(2)
        ga = resample(_recording(a), 7)
        gb = resample(_recording(b), 7)
        gc = resample(_recording(alpha * a + beta * b), 7)
        combined = integrate_acceleration(gc, dt=0.5).values
        split = (
            alpha * integrate_acceleration(ga, dt=0.5).values
            + beta * integrate_acceleration(gb, dt=0.5).values
        )
        assert np.max(np.abs(combined - split)) < 1e-12

    def test_tensor_matches_per_gesture(self, rng):
        values = rng.standard_normal((2, 3, 6, NUM_SENSORS))
        gestures = [
            _gesture(values[k, l], gesture_id=k + 1, realisation=l + 1)
            for k in range(2)
            for l in range(3)
        ]
        tensor = integrate_tensor(assemble_tensor(gestures), dt=0.5)
        for k in range(2):
            for l in range(3):
                single = integrate_acceleration(
                    _gesture(values[k, l]), dt=0.5
                ).values
                assert np.allclose(tensor.data[k, l], single, atol=1e-14)

    def test_recording_integration_uses_own_dt(self, rng):
        samples = rng.standard_normal((5, NUM_SENSORS))
        rec = _recording(samples)
        out = integrate_recording(rec)
        dt = rec.dt_seconds
        expected = np.cumsum(np.cumsum(samples[:, ACCEL_CHANNELS], axis=0) * dt, axis=0) * dt
        assert np.allclose(out.samples[:, ACCEL_CHANNELS], expected, atol=1e-15)
        assert np.array_equal(out.samples[:, :5], samples[:, :5])


class TestAssemble:
    def test_single_slot(self, rng):
        values = rng.standard_normal((4, NUM_SENSORS))
        tensor = assemble_tensor([_gesture(values)], 1, 1)
        assert np.array_equal(tensor.data[0, 0], values)

    def test_round_trip_all_slots(self, rng):
        values = rng.standard_normal((3, 2, 5, NUM_SENSORS))
        gestures = [
            _gesture(values[k, l], gesture_id=k + 1, realisation=l + 1)
            for k in range(3)
            for l in range(2)
        ]
        tensor = assemble_tensor(gestures)
        assert np.array_equal(tensor.data, values)

    def test_missing_slot(self):
        gestures = [
            _gesture(np.zeros((3, NUM_SENSORS)), gesture_id=k, realisation=l)
            for k, l in [(1, 1), (1, 2), (2, 2)]
        ]
        with pytest.raises(MissingRealisation):
            assemble_tensor(gestures, 2, 2)

    def test_duplicate_slot(self):
        g = _gesture(np.zeros((3, NUM_SENSORS)))
        with pytest.raises(DuplicateRealisation):
            assemble_tensor([g, g], 1, 1)

    def test_out_of_grid(self):
        g = _gesture(np.zeros((3, NUM_SENSORS)), gesture_id=3)
        with pytest.raises(UnknownRealisation):
            assemble_tensor([g], 2, 1)


class TestStudentise:
    def test_moments_after(self, rng):
        tensor = GestureTensor(
            data=rng.standard_normal((3, 4, 6, NUM_SENSORS)) * 7 + 2, integrated=True
        )
        out = studentise(tensor)
        means = out.data.mean(axis=(0, 1, 2))
        stds = out.data.std(axis=(0, 1, 2))
        assert np.max(np.abs(means)) < 1e-10
        assert np.max(np.abs(stds - 1.0)) < 1e-10
        assert out.sensor_stds.shape == (NUM_SENSORS,)

    def test_constant_channel_aborts(self, rng):
        data = rng.standard_normal((2, 2, 5, NUM_SENSORS))
        data[..., 3] = 42.0
        with pytest.raises(DegenerateSensor):
            studentise(GestureTensor(data=data, integrated=True))

    def test_fixed_point_pm_one(self):
        data = np.zeros((1, 2, 2, NUM_SENSORS))
        data[0, 0] = 1.0
        data[0, 1] = -1.0
        out = studentise(GestureTensor(data=data, integrated=True))
        assert np.allclose(out.data, data, atol=1e-15)

    @given(st.integers(min_value=0, max_value=2**31))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        tensor = GestureTensor(
            data=rng.standard_normal((2, 3, 4, NUM_SENSORS)), integrated=True
        )
        once = studentise(tensor)
        twice = studentise(once)
        assert np.max(np.abs(twice.data - once.data)) < 1e-10


class TestFlatten:
    def test_hand_example(self):
        # one realisation, 2 time samples, values chosen per channel
        data = np.zeros((1, 1, 2, NUM_SENSORS))
        data[0, 0] = np.arange(1, 2 * NUM_SENSORS + 1).reshape(2, NUM_SENSORS)
        tensor = GestureTensor(
            data=data,
            integrated=True,
            sensor_means=np.zeros(NUM_SENSORS),
            sensor_stds=np.ones(NUM_SENSORS),
        )
        matrix = flatten(tensor)
        # sensor-major: channel s contributes rows (s*2, s*2+1)
        expected = data[0, 0].T.reshape(-1)
        assert np.array_equal(matrix.values[:, 0], expected)
        assert matrix.values[:2, 0].tolist() == [1.0, 11.0]

    def test_requires_studentised(self, rng):
        tensor = GestureTensor(
            data=rng.standard_normal((2, 2, 3, NUM_SENSORS)), integrated=True
        )
        with pytest.raises(NotStudentised):
            flatten(tensor)

    def test_shapes_and_index(self, small_run):
        matrix, tensor, _ = small_run
        kk, ll = tensor.n_types, tensor.n_realisations
        assert matrix.values.shape == (tensor.n_time * NUM_SENSORS, kk * ll)
        assert matrix.columns[0] == (1, 1)
        assert matrix.columns[-1] == (kk, ll)
        assert matrix.column_of(2, 3) == 1 * ll + 2
        with pytest.raises(UnknownRealisation):
            matrix.column_of(99, 1)

    @given(st.integers(min_value=0, max_value=2**31))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        data = rng.standard_normal((3, 2, 4, NUM_SENSORS))
        tensor = GestureTensor(
            data=data,
            integrated=True,
            sensor_means=np.zeros(NUM_SENSORS),
            sensor_stds=np.ones(NUM_SENSORS),
        )
        matrix = flatten(tensor)
        assert np.array_equal(unflatten(matrix), data)
        # single-column reshape agrees with the tensor slice
        assert np.array_equal(
            unflatten_column(matrix.values[:, 0], 4, NUM_SENSORS), data[0, 0]
        )


class TestPipeline:
    def test_default_order_runs(self, small_corpus):
        matrix, tensor = preprocess_corpus(small_corpus)
        assert tensor.integrated and tensor.studentised
        assert matrix.values.shape == (200, 20)

    def test_orders_differ_but_agree_on_shape(self, small_corpus):
        default, _ = preprocess_corpus(small_corpus, order="paper")
        physical, _ = preprocess_corpus(small_corpus, order="physical")
        assert default.values.shape == physical.values.shape
        assert not np.array_equal(default.values, physical.values)

    def test_subset_overrides(self, small_corpus):
        matrix, tensor = preprocess_corpus(small_corpus, n_types=2, n_realisations=3)
        assert tensor.data.shape[:2] == (2, 3)
        assert matrix.values.shape[1] == 6

    def test_dump_is_parseable(self, tmp_path, small_run):
        matrix, tensor, _ = small_run
        path = tmp_path / "dm.csv"
        dump_data_matrix(matrix, path, tensor)
        rows = [
            [float(x) for x in line.split(",")]
            for line in path.read_text().splitlines()
            if not line.startswith("#")
        ]
        assert np.array_equal(np.array(rows), matrix.values)
