import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eigengestures import (
    RawRecording,
    SynthConfig,
    builtin_manifest,
    load_corpus,
    load_recording,
    save_corpus,
    save_recording,
    synthesize_corpus,
)
from eigengestures.dataset import (
    ACCEL_CHANNELS,
    NUM_SENSORS,
    SENSOR_NAMES,
    TEMPOS,
    realisation_slot,
)
from eigengestures.errors import (
    BadConfig,
    BadShape,
    DataError,
    MalformedFile,
    TooShort,
)


def _recording(samples, **overrides):
    kwargs = dict(
        gesture_id=1, performer_id=1, repetition=1, tempo="normal", samples=samples
    )
    kwargs.update(overrides)
    return RawRecording(**kwargs)


class TestRawRecording:
    def test_accepts_minimal(self):
        rec = _recording(np.zeros((2, 10)))
        assert rec.n_samples == 2
        assert rec.dt_seconds == 0.030

    def test_samples_are_read_only(self):
        rec = _recording(np.zeros((3, 10)))
        with pytest.raises(ValueError):
            rec.samples[0, 0] = 1.0

    def test_wrong_channel_count(self):
        with pytest.raises(BadShape):
            _recording(np.zeros((3, 9)))

    def test_single_sample_rejected(self):
        with pytest.raises(TooShort):
            _recording(np.zeros((1, 10)))

    def test_non_finite_rejected(self):
        samples = np.zeros((3, 10))
        samples[1, 4] = np.nan
        with pytest.raises(DataError):
            _recording(samples)

    def test_bad_tempo(self):
        with pytest.raises(DataError):
            _recording(np.zeros((3, 10)), tempo="sideways")

    def test_realisation_slot(self):
        assert realisation_slot(1, 1) == 1
        assert realisation_slot(1, 5) == 5
        assert realisation_slot(2, 1) == 6
        assert realisation_slot(4, 5) == 20
        assert _recording(np.zeros((2, 10)), performer_id=3, repetition=2).realisation == 12


class TestManifest:
    def test_has_22_unique_entries(self):
        manifest = builtin_manifest()
        assert len(manifest) == 22
        names = [e.name for e in manifest.entries]
        assert len(set(names)) == 22

    def test_known_entries(self):
        manifest = builtin_manifest()
        first = manifest.entry(1)
        assert first.name == "A-OK"
        assert first.gesture_class == "symbolic"
        assert first.motion == frozenset("F")
        rotating = manifest.entry(18)
        assert rotating.name == "Rotating"
        assert rotating.gesture_class == "manipulative"
        assert rotating.motion == frozenset("R")
        relocate = manifest.entry(22)
        assert relocate.name == "Relocate"
        assert relocate.gesture_class == "deictic"
        assert relocate.motion == frozenset("TF")

    def test_periodic_set(self):
        manifest = builtin_manifest()
        periodic = {e.index for e in manifest.entries if e.periodic}
        assert periodic == {2, 3, 7, 8, 10, 12, 13, 14, 15, 17, 18, 19}

    def test_out_of_range_lookup(self):
        with pytest.raises(DataError):
            builtin_manifest().entry(23)


class TestRecordingIo:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        samples = rng.standard_normal((7, NUM_SENSORS)) * 1e3
        rec = _recording(samples, gesture_id=5)
        path = tmp_path / "rec.csv"
        save_recording(rec, path)
        back = load_recording(path, gesture_id=5)
        assert back.samples.tobytes() == rec.samples.tobytes()

    def test_zero_file(self, tmp_path):
        path = tmp_path / "z.csv"
        path.write_text("\n".join(",".join(["0.0"] * 10) for _ in range(3)) + "\n")
        rec = load_recording(path, gesture_id=1)
        assert rec.samples.shape == (3, 10)
        assert not rec.samples.any()

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3,4,5,6,7,8,9\n" * 3)
        with pytest.raises(MalformedFile):
            load_recording(path, gesture_id=1)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2,3,4,5,6,7,8,9,x\n" * 3)
        with pytest.raises(MalformedFile):
            load_recording(path, gesture_id=1)

    def test_too_short(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text(",".join(["0.0"] * 10) + "\n")
        with pytest.raises(TooShort):
            load_recording(path, gesture_id=1)

    def test_comments_skipped(self, tmp_path):
        path = tmp_path / "c.csv"
        body = ",".join(["1.5"] * 10)
        path.write_text(f"# {','.join(SENSOR_NAMES)}\n{body}\n# mid comment\n{body}\n")
        rec = load_recording(path, gesture_id=1)
        assert rec.samples.shape == (2, 10)

    @given(
        n=st.integers(min_value=2, max_value=9),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_round_trip_property(self, tmp_path_factory, n, seed):
        rng = np.random.default_rng(seed)
        samples = rng.standard_normal((n, NUM_SENSORS)) * 10.0 ** rng.integers(-6, 7)
        rec = _recording(samples)
        path = tmp_path_factory.mktemp("rt") / "rec.csv"
        save_recording(rec, path)
        back = load_recording(path, gesture_id=1)
        assert np.array_equal(back.samples, rec.samples)


class TestCorpusIo:
    def test_round_trip(self, tmp_path, small_corpus):
        manifest_path = save_corpus(small_corpus, tmp_path / "corpus")
        back, manifest = load_corpus(manifest_path)
        assert len(back) == len(small_corpus)
        assert len(manifest) == 22
        by_key = {(r.gesture_id, r.realisation): r for r in back}
        for rec in small_corpus:
            twin = by_key[(rec.gesture_id, rec.realisation)]
            assert np.array_equal(twin.samples, rec.samples)
            assert twin.tempo == rec.tempo
            assert twin.dt_seconds == rec.dt_seconds

    def test_rejects_wrong_format_tag(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"format": "something-else/9"}')
        with pytest.raises(MalformedFile):
            load_corpus(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("not json at all {")
        with pytest.raises(MalformedFile):
            load_corpus(path)


class TestSynthConfig:
    def test_defaults_valid(self):
        SynthConfig().validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_types=0),
            dict(n_types=23),
            dict(n_realisations=0),
            dict(true_rank=0),
            dict(n_types=2, n_realisations=2, true_rank=5),
            dict(noise_sigma=-0.1),
            dict(length_range=(1, 10)),
            dict(length_range=(50, 40)),
            dict(length_range=(40, 50)),  # no admissible length inside
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(BadConfig):
            SynthConfig(**kwargs).validate()


class TestSynthesize:
    def test_shape_and_metadata(self, small_corpus):
        assert len(small_corpus) == 20
        keys = {(r.gesture_id, r.realisation) for r in small_corpus}
        assert keys == {(k, l) for k in range(1, 5) for l in range(1, 6)}
        for rec in small_corpus:
            assert rec.samples.shape[1] == NUM_SENSORS
            assert rec.tempo in TEMPOS
            # lengths sit on the resample-exact lattice
            assert (rec.n_samples - 1) % 19 == 0

    def test_deterministic(self):
        cfg = SynthConfig(n_types=3, n_realisations=4, true_rank=2, seed=5)
        a = synthesize_corpus(cfg)
        b = synthesize_corpus(cfg)
        for ra, rb in zip(a, b):
            assert ra.samples.tobytes() == rb.samples.tobytes()

    def test_seed_changes_data(self):
        base = dict(n_types=3, n_realisations=4, true_rank=2)
        a = synthesize_corpus(SynthConfig(seed=1, **base))
        b = synthesize_corpus(SynthConfig(seed=2, **base))
        assert not np.array_equal(a[0].samples, b[0].samples)

    def test_rank_one_realisations_collinear(self):
        from eigengestures import preprocess_corpus

        recs = synthesize_corpus(
            SynthConfig(n_types=3, n_realisations=3, true_rank=1, noise_sigma=0.0, seed=4)
        )
        matrix, _ = preprocess_corpus(recs)
        cols = matrix.values.T
        ref = cols[np.argmax(np.linalg.norm(cols, axis=1))]
        for col in cols:
            # the 2x2 Gram determinant vanishes exactly for scalar multiples
            gram = np.dot(ref, ref) * np.dot(col, col) - np.dot(ref, col) ** 2
            assert abs(gram) < 1e-12 * np.dot(ref, ref) * np.dot(col, col)

    def test_accel_channels_integrate_back_smooth(self):
        # second differences emitted as acceleration stay finite and the
        # non-accel channels are already smooth targets
        recs = synthesize_corpus(
            SynthConfig(n_types=2, n_realisations=2, true_rank=2, noise_sigma=0.0, seed=9)
        )
        for rec in recs:
            assert np.all(np.isfinite(rec.samples[:, ACCEL_CHANNELS]))
