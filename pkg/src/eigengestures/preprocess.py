"""Preprocessing pipeline: resampling, tensor assembly, accelerometer
integration, studentisation, and flattening into the analysis matrix.

The default stage order is resample, assemble, integrate, studentise,
flatten. Integration on the resampled grid uses dt=1 because studentisation
removes overall scale anyway; the "physical" order variant integrates each
recording on its raw grid with its own dt_seconds before resampling.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ._arrays import locked_array
from ._atomic import atomic_write_text
from .dataset import (
    ACCEL_CHANNELS,
    NUM_SENSORS,
    SENSOR_NAMES,
    DEFAULT_RESAMPLE_LENGTH,
    RawRecording,
)
from .errors import (
    BadConfig,
    BadShape,
    BadTarget,
    DataError,
    DegenerateSensor,
    DuplicateRealisation,
    EmptyInput,
    MissingRealisation,
    NotStudentised,
    UnknownRealisation,
)


@dataclass(frozen=True)
class ResampledGesture:
    """A recording resampled onto a common uniform time grid."""

    values: np.ndarray
    gesture_id: int
    realisation: int
    performer_id: int
    repetition: int
    tempo: str
    dt_seconds: float
    integrated: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != NUM_SENSORS:
            raise BadShape(
                f"resampled values must be (n, {NUM_SENSORS}), got {values.shape}"
            )
        if values.shape[0] < 2:
            raise BadShape(f"resampled gesture has {values.shape[0]} samples, need >= 2")
        if not np.all(np.isfinite(values)):
            raise DataError("resampled gesture contains non-finite values")
        object.__setattr__(self, "values", locked_array(values))

    @property
    def n_time(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GestureTensor:
    """The 4-way array data[k, l, t, s] plus per-sensor statistics.

    sensor_means and sensor_stds are None until studentise records them.
    """

    data: np.ndarray
    integrated: bool
    sensor_means: np.ndarray | None = None
    sensor_stds: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 4 or data.shape[3] != NUM_SENSORS:
            raise BadShape(
                f"tensor must be (types, realisations, time, {NUM_SENSORS}), "
                f"got {data.shape}"
            )
        object.__setattr__(self, "data", locked_array(data))
        for name in ("sensor_means", "sensor_stds"):
            stat = getattr(self, name)
            if stat is not None:
                stat = np.asarray(stat, dtype=np.float64)
                if stat.shape != (NUM_SENSORS,):
                    raise BadShape(f"{name} must have shape ({NUM_SENSORS},)")
                object.__setattr__(self, name, locked_array(stat))

    @property
    def n_types(self) -> int:
        return self.data.shape[0]

    @property
    def n_realisations(self) -> int:
        return self.data.shape[1]

    @property
    def n_time(self) -> int:
        return self.data.shape[2]

    @property
    def studentised(self) -> bool:
        return self.sensor_stds is not None


@dataclass(frozen=True)
class DataMatrix:
    """The flattened matrix fed to the decomposition.

    Rows are sensor-major: row = s * n_time + t (0-based), so each sensor's
    whole trajectory is contiguous. Columns are realisations in (type,
    realisation) lexicographic order; `columns` holds the 1-based pairs.
    """

    values: np.ndarray
    columns: tuple
    n_time: int
    n_sensors: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise BadShape(f"data matrix must be 2-d, got {values.shape}")
        if values.shape[0] != self.n_time * self.n_sensors:
            raise BadShape(
                f"data matrix has {values.shape[0]} rows, expected "
                f"{self.n_time} * {self.n_sensors}"
            )
        columns = tuple((int(k), int(l)) for k, l in self.columns)
        if len(columns) != values.shape[1]:
            raise BadShape(
                f"column index has {len(columns)} entries for {values.shape[1]} columns"
            )
        object.__setattr__(self, "values", locked_array(values))
        object.__setattr__(self, "columns", columns)

    @property
    def row_index(self) -> tuple:
        """1-based (t, s) pair for every row."""
        return tuple(
            (t + 1, s + 1) for s in range(self.n_sensors) for t in range(self.n_time)
        )

    def column_of(self, gesture_id: int, realisation: int) -> int:
        """0-based column position of realisation (k, l)."""
        try:
            return self.columns.index((gesture_id, realisation))
        except ValueError:
            raise UnknownRealisation(
                f"realisation ({gesture_id}, {realisation}) is not a column "
                f"of this data matrix"
            ) from None


def resample(rec: RawRecording, n_samples: int = DEFAULT_RESAMPLE_LENGTH) -> ResampledGesture:
    """Resample every channel onto a uniform n_samples grid over [0, 1].

    Each channel is treated as a piecewise-linear function of normalized
    time; endpoints are preserved exactly.
    """
    if n_samples < 2:
        raise BadTarget(f"resample target must be >= 2, got {n_samples}")
    source_grid = np.linspace(0.0, 1.0, rec.n_samples)
    target_grid = np.linspace(0.0, 1.0, n_samples)
    values = np.empty((n_samples, NUM_SENSORS))
    for s in range(NUM_SENSORS):
        values[:, s] = np.interp(target_grid, source_grid, rec.samples[:, s])
    # np.interp clamps at the ends; force bit-exact endpoint copies anyway.
    values[0] = rec.samples[0]
    values[-1] = rec.samples[-1]
    return ResampledGesture(
        values=values,
        gesture_id=rec.gesture_id,
        realisation=rec.realisation,
        performer_id=rec.performer_id,
        repetition=rec.repetition,
        tempo=rec.tempo,
        dt_seconds=rec.dt_seconds,
        integrated=False,
    )


def _double_integrate_block(accel: np.ndarray, dt: float) -> np.ndarray:
    """v_t = v_{t-1} + a_t dt, p_t = p_{t-1} + v_t dt, v_0 = p_0 = 0."""
    velocity = np.cumsum(accel, axis=0) * dt
    return np.cumsum(velocity, axis=0) * dt


def integrate_acceleration(g: ResampledGesture, dt: float = 1.0) -> ResampledGesture:
    """Replace accelerometer channels by their discrete double integrals.

    dt defaults to 1 on the resampled grid; the overall scale is removed
    by studentisation later. Bend and orientation channels are untouched.
    """
    if not dt > 0:
        raise BadConfig(f"integration step must be > 0, got {dt}")
    if g.integrated:
        raise DataError("gesture is already integrated")
    values = np.array(g.values, copy=True)
    values[:, ACCEL_CHANNELS] = _double_integrate_block(values[:, ACCEL_CHANNELS], dt)
    return dataclasses.replace(g, values=values, integrated=True)


def integrate_recording(rec: RawRecording, dt: float | None = None) -> RawRecording:
    """Double-integrate the accelerometer channels on the raw grid.

    Used by the "physical" stage order, where integration happens before
    resampling; dt defaults to the recording's own sampling interval.
    """
    dt = rec.dt_seconds if dt is None else dt
    if not dt > 0:
        raise BadConfig(f"integration step must be > 0, got {dt}")
    samples = np.array(rec.samples, copy=True)
    samples[:, ACCEL_CHANNELS] = _double_integrate_block(samples[:, ACCEL_CHANNELS], dt)
    return dataclasses.replace(rec, samples=samples)


def assemble_tensor(
    gestures,
    n_types: int | None = None,
    n_realisations: int | None = None,
) -> GestureTensor:
    """Stack resampled gestures into the 4-way tensor data[k, l, t, s].

    Every (gesture_id, realisation) slot in the 1..n_types x 1..n_realisations
    grid must be present exactly once. Counts default to the maxima found.
    """
    gestures = list(gestures)
    if not gestures:
        raise EmptyInput("no gestures to assemble")
    if n_types is None:
        n_types = max(g.gesture_id for g in gestures)
    if n_realisations is None:
        n_realisations = max(g.realisation for g in gestures)

    n_time = gestures[0].n_time
    integrated = gestures[0].integrated
    data = np.full((n_types, n_realisations, n_time, NUM_SENSORS), np.nan)
    seen = np.zeros((n_types, n_realisations), dtype=bool)
    for g in gestures:
        if g.n_time != n_time:
            raise BadShape(
                f"mixed resample lengths: {g.n_time} vs {n_time} "
                f"at ({g.gesture_id}, {g.realisation})"
            )
        if g.integrated != integrated:
            raise DataError("mixed integrated flags across gestures")
        k, l = g.gesture_id, g.realisation
        if not (1 <= k <= n_types and 1 <= l <= n_realisations):
            raise UnknownRealisation(
                f"realisation ({k}, {l}) falls outside the "
                f"{n_types} x {n_realisations} grid"
            )
        if seen[k - 1, l - 1]:
            raise DuplicateRealisation(f"realisation ({k}, {l}) appears twice")
        seen[k - 1, l - 1] = True
        data[k - 1, l - 1] = g.values

    if not seen.all():
        k, l = np.argwhere(~seen)[0] + 1
        raise MissingRealisation(f"realisation ({k}, {l}) is missing")
    return GestureTensor(data=data, integrated=integrated)


def integrate_tensor(tensor: GestureTensor, dt: float = 1.0) -> GestureTensor:
    """Double-integrate the accelerometer channels of every realisation."""
    if not dt > 0:
        raise BadConfig(f"integration step must be > 0, got {dt}")
    if tensor.integrated:
        raise DataError("tensor is already integrated")
    data = np.array(tensor.data, copy=True)
    # Time is axis 2; cumulative sums run along it for all (k,l) at once.
    accel = data[:, :, :, ACCEL_CHANNELS]
    velocity = np.cumsum(accel, axis=2) * dt
    data[:, :, :, ACCEL_CHANNELS] = np.cumsum(velocity, axis=2) * dt
    return GestureTensor(data=data, integrated=True)


def studentise(tensor: GestureTensor) -> GestureTensor:
    """Centre and scale each sensor to zero mean and unit std globally.

    Moments are taken over all (k, l, t) per sensor, population convention.
    A sensor whose spread is below 1e-12 would blow up under division, so
    it aborts the run instead.
    """
    data = tensor.data
    means = data.mean(axis=(0, 1, 2))
    stds = data.std(axis=(0, 1, 2))
    degenerate = np.flatnonzero(stds < 1e-12)
    if degenerate.size:
        names = ", ".join(SENSOR_NAMES[int(s)] for s in degenerate)
        raise DegenerateSensor(f"constant sensor channel(s): {names}")
    return GestureTensor(
        data=(data - means) / stds,
        integrated=tensor.integrated,
        sensor_means=means,
        sensor_stds=stds,
    )


def flatten(tensor: GestureTensor) -> DataMatrix:
    """Vectorise each realisation into one column of the data matrix."""
    if not tensor.studentised:
        raise NotStudentised("tensor must be studentised before flattening")
    kk, ll, n_time, n_sensors = tensor.data.shape
    # (k,l,t,s) -> (k,l,s,t) so rows come out sensor-major after the reshape.
    values = tensor.data.transpose(0, 1, 3, 2).reshape(kk * ll, n_sensors * n_time).T
    columns = tuple((k, l) for k in range(1, kk + 1) for l in range(1, ll + 1))
    return DataMatrix(
        values=values, columns=columns, n_time=n_time, n_sensors=n_sensors
    )


def unflatten_column(column: np.ndarray, n_time: int, n_sensors: int) -> np.ndarray:
    """Reshape one data-matrix column back to a (time, sensor) matrix."""
    column = np.asarray(column, dtype=np.float64)
    if column.shape != (n_time * n_sensors,):
        raise BadShape(
            f"column must have length {n_time * n_sensors}, got {column.shape}"
        )
    return column.reshape(n_sensors, n_time).T


def unflatten(matrix: DataMatrix) -> np.ndarray:
    """Invert flatten: rebuild the 4-way tensor data from the data matrix."""
    kk = max(k for k, _ in matrix.columns)
    ll = max(l for _, l in matrix.columns)
    if len(matrix.columns) != kk * ll:
        raise BadShape("column index does not cover a full (type, realisation) grid")
    stacked = matrix.values.T.reshape(kk, ll, matrix.n_sensors, matrix.n_time)
    return stacked.transpose(0, 1, 3, 2)


def preprocess_corpus(
    recordings,
    *,
    n_time: int = DEFAULT_RESAMPLE_LENGTH,
    order: str = "paper",
    n_types: int | None = None,
    n_realisations: int | None = None,
):
    """Run the full preprocessing pipeline over a corpus.

    order "paper" resamples first and integrates acceleration on the common
    grid; "physical" integrates each recording on its raw time grid before
    resampling. n_types / n_realisations restrict the corpus to a leading
    sub-grid when given.

    Returns (DataMatrix, studentised GestureTensor).
    """
    if order not in ("paper", "physical"):
        raise BadConfig(f"order must be 'paper' or 'physical', got {order!r}")
    recordings = list(recordings)
    if n_types is not None:
        recordings = [r for r in recordings if r.gesture_id <= n_types]
    if n_realisations is not None:
        recordings = [r for r in recordings if r.realisation <= n_realisations]
    if not recordings:
        raise EmptyInput("no recordings left to preprocess")

    if order == "physical":
        gestures = [
            dataclasses.replace(resample(integrate_recording(r), n_time), integrated=True)
            for r in recordings
        ]
        tensor = assemble_tensor(gestures, n_types, n_realisations)
    else:
        gestures = [resample(r, n_time) for r in recordings]
        tensor = integrate_tensor(assemble_tensor(gestures, n_types, n_realisations))

    tensor = studentise(tensor)
    return flatten(tensor), tensor


def dump_data_matrix(matrix: DataMatrix, path, tensor: GestureTensor | None = None):
    """Write the data matrix as delimited text with index maps in comments.

    Per-sensor means and stds recorded by studentise are included when the
    source tensor is provided.
    """
    n_time, n_sensors = matrix.n_time, matrix.n_sensors
    lines = [
        f"# data matrix: {matrix.values.shape[0]} rows x {matrix.values.shape[1]} columns",
        f"# row r holds sensor s = r // {n_time} (0-based), time t = r % {n_time}",
    ]
    for s in range(n_sensors):
        name = SENSOR_NAMES[s] if s < len(SENSOR_NAMES) else f"sensor_{s + 1}"
        lines.append(f"# rows {s * n_time}..{(s + 1) * n_time - 1}: {name}")
    lines.append(
        "# columns (gesture:realisation): "
        + ",".join(f"{k}:{l}" for k, l in matrix.columns)
    )
    if tensor is not None and tensor.studentised:
        lines.append(
            "# sensor_means: " + ",".join(repr(float(v)) for v in tensor.sensor_means)
        )
        lines.append(
            "# sensor_stds: " + ",".join(repr(float(v)) for v in tensor.sensor_stds)
        )
    for row in matrix.values:
        lines.append(",".join(repr(float(v)) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")
