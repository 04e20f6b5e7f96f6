"""Recording and taxonomy data types, corpus file I/O, and the synthetic
corpus generator.

A recording is one performance of one gesture captured by a 10-channel
data glove: five finger-bend sensors, a three-axis accelerometer, and two
palm-orientation angles. Recordings have variable length; the nominal
inter-sample interval is about 30 ms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._arrays import locked_array
from ._atomic import atomic_write_text
from .errors import (
    BadConfig,
    BadShape,
    DataError,
    IoFailure,
    MalformedFile,
    TooShort,
)

SENSOR_NAMES = (
    "bend_thumb",
    "bend_index",
    "bend_middle",
    "bend_ring",
    "bend_little",
    "accel_x",
    "accel_y",
    "accel_z",
    "orient_roll",
    "orient_pitch",
)
NUM_SENSORS = len(SENSOR_NAMES)
BEND_CHANNELS = slice(0, 5)
ACCEL_CHANNELS = slice(5, 8)
ROLL_CHANNEL = 8
PITCH_CHANNEL = 9

TEMPOS = ("normal", "fast", "slow")
GESTURE_CLASSES = ("symbolic", "deictic", "iconic", "manipulative")
MOTION_COMPONENTS = frozenset("TRF")  # hand translation / rotation / finger movement

DEFAULT_DT_SECONDS = 0.030
DEFAULT_RESAMPLE_LENGTH = 20

# A 4-performers-x-5-repetitions session: three normal runs, one fast, one slow.
REPETITIONS_PER_PERFORMER = 5
TEMPO_BY_REPETITION = ("normal", "normal", "normal", "fast", "slow")

MANIFEST_FORMAT = "gesture-corpus/1"


def realisation_slot(performer_id: int, repetition: int) -> int:
    """1-based realisation index of a recording within its gesture type.

    Corpora fill slots densely: performer 1 contributes repetitions 1..5
    as slots 1..5, performer 2 as slots 6..10, and so on.
    """
    return (performer_id - 1) * REPETITIONS_PER_PERFORMER + repetition


@dataclass(frozen=True)
class RawRecording:
    """One performance of one gesture: an (n_samples, 10) matrix plus metadata."""

    gesture_id: int
    performer_id: int
    repetition: int
    tempo: str
    samples: np.ndarray
    dt_seconds: float = DEFAULT_DT_SECONDS

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != NUM_SENSORS:
            raise BadShape(
                f"recording samples must be (n, {NUM_SENSORS}), got {samples.shape}"
            )
        if samples.shape[0] < 2:
            raise TooShort(f"recording has {samples.shape[0]} samples, need >= 2")
        if not np.all(np.isfinite(samples)):
            raise DataError("recording contains non-finite samples")
        if self.gesture_id < 1:
            raise DataError(f"gesture_id must be >= 1, got {self.gesture_id}")
        if self.performer_id < 1:
            raise DataError(f"performer_id must be >= 1, got {self.performer_id}")
        if not 1 <= self.repetition <= REPETITIONS_PER_PERFORMER:
            raise DataError(
                f"repetition must be 1..{REPETITIONS_PER_PERFORMER}, got {self.repetition}"
            )
        if self.tempo not in TEMPOS:
            raise DataError(f"tempo must be one of {TEMPOS}, got {self.tempo!r}")
        if not self.dt_seconds > 0:
            raise DataError(f"dt_seconds must be > 0, got {self.dt_seconds}")
        object.__setattr__(self, "samples", locked_array(samples))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def realisation(self) -> int:
        return realisation_slot(self.performer_id, self.repetition)


@dataclass(frozen=True)
class GestureEntry:
    index: int
    name: str
    gesture_class: str
    motion: frozenset
    periodic: bool
    comment: str

    def __post_init__(self):
        if self.gesture_class not in GESTURE_CLASSES:
            raise DataError(f"unknown gesture class {self.gesture_class!r}")
        motion = frozenset(self.motion)
        if not motion <= MOTION_COMPONENTS:
            raise DataError(f"motion components must be within T/R/F, got {motion}")
        object.__setattr__(self, "motion", motion)


# The 22-gesture taxonomy. Periodic gestures consist of three repeated
# cycles per performance.
_PERIODIC = frozenset({2, 3, 7, 8, 10, 12, 13, 14, 15, 17, 18, 19})

_TAXONOMY = (
    (1, "A-OK", "symbolic", "F", "thumb and index form a ring, other fingers raised"),
    (2, "Walking", "iconic", "TF", "index and middle fingers stride like legs"),
    (3, "Cutting", "iconic", "F", "index and middle fingers snip like scissors"),
    (4, "Shove away", "iconic", "T", "flat hand pushes an imagined object outward"),
    (5, "Point at self", "deictic", "RF", "index finger turns back toward the performer"),
    (6, "Thumbs up", "symbolic", "RF", "fist with thumb raised"),
    (7, "Crazy", "symbolic", "TRF", "index finger circles at temple height"),
    (8, "Knocking", "iconic", "RF", "knuckles rap on an imagined door"),
    (9, "Cutthroat", "symbolic", "TR", "edge of hand drawn across the throat line"),
    (10, "Money", "symbolic", "F", "thumb rubs across the fingertips"),
    (11, "Thumbs down", "symbolic", "RF", "fist with thumb lowered"),
    (12, "Doubting", "symbolic", "F", "spread hand rocks side to side"),
    (13, "Continue", "iconic", "R", "hand rolls forward in circles"),
    (14, "Speaking", "iconic", "F", "fingers open and close against the thumb like a mouth"),
    (15, "Hello", "symbolic", "R", "open hand waves side to side"),
    (16, "Grasping", "manipulative", "TF", "hand closes around an imagined object"),
    (17, "Scaling", "manipulative", "F", "thumb and fingers spread apart and back together"),
    (18, "Rotating", "manipulative", "R", "hand twists as if turning a dial"),
    (19, "Come here", "symbolic", "F", "fingers beckon toward the performer"),
    (20, "Telephone", "symbolic", "TRF", "thumb and little finger held to ear and mouth"),
    (21, "Go away", "symbolic", "F", "fingers flick outward in dismissal"),
    (22, "Relocate", "deictic", "TF", "point at an object, then at its destination"),
)


@dataclass(frozen=True)
class GestureManifest:
    """The fixed 22-entry gesture taxonomy."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if len(entries) != 22:
            raise DataError(f"manifest must have exactly 22 entries, got {len(entries)}")
        if [e.index for e in entries] != list(range(1, 23)):
            raise DataError("manifest entries must be indexed 1..22 in order")
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise DataError("manifest gesture names must be unique")
        periodic = {e.index for e in entries if e.periodic}
        if periodic != _PERIODIC:
            raise DataError(
                f"periodic flags must mark exactly {sorted(_PERIODIC)}, got {sorted(periodic)}"
            )
        object.__setattr__(self, "entries", entries)

    def entry(self, gesture_id: int) -> GestureEntry:
        if not 1 <= gesture_id <= len(self.entries):
            raise DataError(f"gesture_id {gesture_id} not in manifest")
        return self.entries[gesture_id - 1]

    def __len__(self) -> int:
        return len(self.entries)


def builtin_manifest() -> GestureManifest:
    """The canonical 22-gesture taxonomy."""
    return GestureManifest(
        entries=tuple(
            GestureEntry(
                index=idx,
                name=name,
                gesture_class=cls,
                motion=frozenset(motion),
                periodic=idx in _PERIODIC,
                comment=comment,
            )
            for idx, name, cls, motion, comment in _TAXONOMY
        )
    )


# -- recording file I/O ----------------------------------------------------
#
# Recording file format: UTF-8 text, one sample per line, exactly 10
# numeric fields separated by commas, channels in SENSOR_NAMES order.
# Lines starting with '#' are comments. Decimal point is '.', no
# thousands separators.

def load_recording(
    path,
    *,
    gesture_id: int,
    performer_id: int = 1,
    repetition: int = 1,
    tempo: str = "normal",
    dt_seconds: float = DEFAULT_DT_SECONDS,
) -> RawRecording:
    """Read one delimited-text recording file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read recording {path}: {exc}") from exc

    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != NUM_SENSORS:
            raise MalformedFile(
                f"{path}:{lineno}: expected {NUM_SENSORS} fields, got {len(fields)}"
            )
        try:
            row = [float(f) for f in fields]
        except ValueError as exc:
            raise MalformedFile(f"{path}:{lineno}: non-numeric field ({exc})") from exc
        if not all(np.isfinite(row)):
            raise MalformedFile(f"{path}:{lineno}: non-finite value")
        rows.append(row)

    if len(rows) < 2:
        raise TooShort(f"{path}: {len(rows)} data rows, need >= 2")
    return RawRecording(
        gesture_id=gesture_id,
        performer_id=performer_id,
        repetition=repetition,
        tempo=tempo,
        samples=np.array(rows, dtype=np.float64),
        dt_seconds=dt_seconds,
    )


def save_recording(rec: RawRecording, path) -> Path:
    """Write a recording as delimited text; round-trips bit-exactly."""
    lines = ["# " + ",".join(SENSOR_NAMES)]
    for row in rec.samples:
        lines.append(",".join(repr(float(v)) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


# -- corpus manifest I/O ----------------------------------------------------
#
# Corpus manifest format (JSON, schema "gesture-corpus/1"):
#   {
#     "format": "gesture-corpus/1",
#     "taxonomy": [{"index", "name", "class", "motion", "periodic", "comment"} x22],
#     "recordings": [{"path", "gesture_id", "performer_id", "repetition",
#                     "tempo", "dt_seconds"} ...]
#   }
# Recording paths are relative to the manifest's directory.

def save_corpus(recordings, directory, manifest: GestureManifest | None = None) -> Path:
    """Write recordings plus a corpus manifest under `directory`.

    Returns the manifest path. Layout: manifest.json at the top,
    recording files under recordings/.
    """
    manifest = manifest if manifest is not None else builtin_manifest()
    directory = Path(directory)
    rec_dir = directory / "recordings"
    try:
        rec_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create corpus directory {rec_dir}: {exc}") from exc

    entries = []
    for rec in recordings:
        rel = f"recordings/g{rec.gesture_id:02d}_p{rec.performer_id}_r{rec.repetition}.csv"
        save_recording(rec, directory / rel)
        entries.append(
            {
                "path": rel,
                "gesture_id": rec.gesture_id,
                "performer_id": rec.performer_id,
                "repetition": rec.repetition,
                "tempo": rec.tempo,
                "dt_seconds": rec.dt_seconds,
            }
        )

    doc = {
        "format": MANIFEST_FORMAT,
        "taxonomy": [
            {
                "index": e.index,
                "name": e.name,
                "class": e.gesture_class,
                "motion": "".join(c for c in "TRF" if c in e.motion),
                "periodic": e.periodic,
                "comment": e.comment,
            }
            for e in manifest.entries
        ],
        "recordings": entries,
    }
    manifest_path = directory / "manifest.json"
    atomic_write_text(manifest_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_corpus(manifest_path):
    """Read a corpus manifest and all recordings it lists.

    Returns (recordings, manifest). Every recording's gesture_id must
    resolve in the manifest.
    """
    manifest_path = Path(manifest_path)
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read corpus manifest {manifest_path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{manifest_path}: invalid JSON ({exc})") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise MalformedFile(
            f"{manifest_path}: unsupported format {doc.get('format')!r}, "
            f"expected {MANIFEST_FORMAT!r}"
        )

    try:
        manifest = GestureManifest(
            entries=tuple(
                GestureEntry(
                    index=t["index"],
                    name=t["name"],
                    gesture_class=t["class"],
                    motion=frozenset(t["motion"]),
                    periodic=t["periodic"],
                    comment=t.get("comment", ""),
                )
                for t in doc["taxonomy"]
            )
        )
        rec_entries = doc["recordings"]
    except (KeyError, TypeError) as exc:
        raise MalformedFile(f"{manifest_path}: missing field {exc}") from exc

    base = manifest_path.parent
    recordings = []
    for entry in rec_entries:
        try:
            rec = load_recording(
                base / entry["path"],
                gesture_id=entry["gesture_id"],
                performer_id=entry.get("performer_id", 1),
                repetition=entry.get("repetition", 1),
                tempo=entry.get("tempo", "normal"),
                dt_seconds=entry.get("dt_seconds", DEFAULT_DT_SECONDS),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedFile(f"{manifest_path}: bad recording entry ({exc})") from exc
        if not 1 <= rec.gesture_id <= len(manifest):
            raise DataError(
                f"recording {entry['path']}: gesture_id {rec.gesture_id} "
                f"does not resolve in the manifest"
            )
        recordings.append(rec)
    return recordings, manifest


# -- synthetic corpus --------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Configuration of the synthetic corpus generator.

    The generator plants a known low-rank structure: each recording is a
    random per-realisation mixture of `true_rank` fixed smooth channel-basis
    curves sampled onto a random-length grid, plus optional white noise.
    With noise_sigma=0 the preprocessed, flattened data matrix is exactly
    rank `true_rank` (capped by the zero-mean constraint at
    (resample length - 1) * channels).

    Recording lengths are drawn from the resample-commensurate lattice
    {m*(N-1)+1} within length_range (N = 20, the default resample length)
    so that linear-interpolation resampling reproduces the planted
    structure exactly.
    """

    n_types: int = 22
    n_realisations: int = 20
    true_rank: int = 8
    noise_sigma: float = 0.05
    length_range: tuple = (39, 153)
    seed: int = 0

    def validate(self) -> None:
        if not 1 <= self.n_types <= 22:
            raise BadConfig(
                f"n_types must be 1..22 (the taxonomy size), got {self.n_types}"
            )
        if self.n_realisations < 1:
            raise BadConfig(f"n_realisations must be >= 1, got {self.n_realisations}")
        cap = min(
            self.n_types * self.n_realisations,
            DEFAULT_RESAMPLE_LENGTH * NUM_SENSORS,
        )
        if not 1 <= self.true_rank <= cap:
            raise BadConfig(f"true_rank must be 1..{cap}, got {self.true_rank}")
        if self.noise_sigma < 0:
            raise BadConfig(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        lo, hi = self.length_range
        if lo < 2 or hi < lo:
            raise BadConfig(f"length_range must satisfy 2 <= min <= max, got {self.length_range}")
        if not self._length_lattice():
            step = DEFAULT_RESAMPLE_LENGTH - 1
            raise BadConfig(
                f"length_range {self.length_range} contains no admissible length "
                f"(lengths are m*{step}+1 for integer m >= 1)"
            )

    def _length_lattice(self):
        step = DEFAULT_RESAMPLE_LENGTH - 1
        lo, hi = self.length_range
        return [n for n in range(lo, hi + 1) if n >= 2 and (n - 1) % step == 0]


def _double_integral(values: np.ndarray, dt: float) -> np.ndarray:
    """Discrete double integral with zero initial velocity and position."""
    return np.cumsum(np.cumsum(values, axis=0), axis=0) * (dt * dt)


def _inverse_double_integral(values: np.ndarray, dt: float) -> np.ndarray:
    """Exact inverse of `_double_integral` (second backward difference)."""
    scaled = values / (dt * dt)
    velocity = np.diff(scaled, axis=0, prepend=0.0)
    return np.diff(velocity, axis=0, prepend=0.0)


def _smooth_basis(rng: np.random.Generator, rank: int, n_time: int, n_sensors: int):
    """Orthonormal smooth patterns with exactly zero time-mean per channel.

    Returns an array (r_eff, n_time, n_sensors) whose vectorisations are
    orthonormal. r_eff < rank only when rank exceeds the dimension of the
    zero-mean subspace, (n_time - 1) * n_sensors.
    """
    curves = rng.standard_normal((rank, n_time, n_sensors))
    # Smooth along time with a short Gaussian kernel, reflect padding.
    offsets = np.arange(-4, 5)
    kernel = np.exp(-0.5 * (offsets / 1.6) ** 2)
    kernel /= kernel.sum()
    pad = np.pad(curves, ((0, 0), (4, 4), (0, 0)), mode="reflect")
    smoothed = sum(
        w * pad[:, 4 + o : 4 + o + n_time, :] for o, w in zip(offsets, kernel)
    )
    smoothed -= smoothed.mean(axis=1, keepdims=True)

    flat = smoothed.reshape(rank, n_time * n_sensors)
    _, sv, vt = np.linalg.svd(flat, full_matrices=False)
    keep = sv > 1e-10 * sv[0]
    return vt[keep].reshape(-1, n_time, n_sensors)


def synthesize_corpus(config: SynthConfig):
    """Generate a corpus with known ground-truth structure.

    Deterministic for a fixed config. The planted structure targets the
    default pipeline (resample length 20, integration on the resampled
    grid): after preprocessing, the flattened matrix is a rank-true_rank
    matrix plus near-white noise of scale noise_sigma.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n_time = DEFAULT_RESAMPLE_LENGTH

    # Basis patterns live in post-integration coordinates; the emitted
    # accelerometer channels carry their second differences so that the
    # pipeline's double integration reproduces the patterns.
    basis = _smooth_basis(rng, config.true_rank, n_time, NUM_SENSORS)
    r_eff = basis.shape[0]
    emitted_basis = basis.copy()
    for j in range(r_eff):
        emitted_basis[j][:, ACCEL_CHANNELS] = _inverse_double_integral(
            basis[j][:, ACCEL_CHANNELS], dt=1.0
        )

    lattice = config._length_lattice()
    target_grid = np.linspace(0.0, 1.0, n_time)
    type_means = rng.standard_normal((config.n_types, r_eff))

    recordings = []
    for k in range(1, config.n_types + 1):
        for l in range(1, config.n_realisations + 1):
            coef = type_means[k - 1] + 0.35 * rng.standard_normal(r_eff)
            pattern = np.tensordot(coef, emitted_basis, axes=1)
            if config.noise_sigma > 0:
                noise = config.noise_sigma * rng.standard_normal((n_time, NUM_SENSORS))
                noise[:, ACCEL_CHANNELS] = _inverse_double_integral(
                    noise[:, ACCEL_CHANNELS].copy(), dt=1.0
                )
                pattern = pattern + noise
            n_samples = lattice[rng.integers(len(lattice))]
            raw_grid = np.linspace(0.0, 1.0, n_samples)
            samples = np.column_stack(
                [
                    np.interp(raw_grid, target_grid, pattern[:, s])
                    for s in range(NUM_SENSORS)
                ]
            )
            repetition = (l - 1) % REPETITIONS_PER_PERFORMER + 1
            recordings.append(
                RawRecording(
                    gesture_id=k,
                    performer_id=(l - 1) // REPETITIONS_PER_PERFORMER + 1,
                    repetition=repetition,
                    tempo=TEMPO_BY_REPETITION[repetition - 1],
                    samples=samples,
                )
            )
    return recordings
