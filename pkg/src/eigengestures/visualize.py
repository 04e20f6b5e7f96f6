"""Affine remapping of eigengestures into hand-presentation coordinates
and deterministic emission of plots and schematic pose frames.

All emitters render through a fixed style config (fonts converted to
paths, pinned hash salt, fixed dpi) so identical inputs produce
byte-identical SVG files.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ._arrays import locked_array
from ._atomic import atomic_write_bytes, atomic_write_text
from .dataset import NUM_SENSORS, SENSOR_NAMES
from .decomposition import Eigengesture
from .errors import (
    BadConfig,
    BadShape,
    EmptyInput,
    FlatEigengestureChannelWarning,
    FrameOutOfRange,
    NotStudentised,
)
from .preprocess import GestureTensor

PLOT_STYLE = {
    "svg.hashsalt": "eigengestures",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 0.9,
    "path.simplify": False,
}

FINGER_LABELS = ("T", "I", "M", "R", "L")

# Pose-glyph calibration. Values arriving at the renderer are in
# studentised units; curl is an affine map of the bend value, straight
# fingers at zero, clamped so extreme values stay drawable (negative curl
# renders as hyperextension beyond straight).
NEUTRAL_CURL_DEG = 0.0
CURL_DEG_PER_UNIT = 55.0
CURL_RANGE_DEG = (-45.0, 175.0)
ROLL_DEG_PER_UNIT = 25.0
PITCH_DEG_PER_UNIT = 25.0
TILT_RANGE_DEG = (-75.0, 75.0)


@dataclass(frozen=True)
class SensorStats:
    """Per-sensor quantile spread over all (k, l, t) of a tensor."""

    lo: float
    hi: float
    q_low: np.ndarray
    q_high: np.ndarray
    dispersion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q_low", locked_array(self.q_low))
        object.__setattr__(self, "q_high", locked_array(self.q_high))
        object.__setattr__(self, "dispersion", locked_array(self.dispersion))


@dataclass(frozen=True)
class RemappedEigengesture:
    """An eigengesture carried into data coordinates channel by channel.

    values[t, s] = shape[t, s] * scale[s] + offset[s]; the first frame
    equals the neutral pose, and each channel's spread matches the data
    spread of that sensor.
    """

    source: Eigengesture
    scale: np.ndarray
    offset: np.ndarray
    values: np.ndarray
    neutral_pose: np.ndarray

    def __post_init__(self):
        for name in ("scale", "offset", "values", "neutral_pose"):
            object.__setattr__(self, name, locked_array(getattr(self, name)))

    @property
    def n_time(self) -> int:
        return self.values.shape[0]


def quantile_dispersion(values, lo: float = 0.05, hi: float = 0.95) -> float:
    """Difference between the hi and lo quantiles of a value set.

    Quantiles use the linear-interpolation convention: for sorted x[1..m],
    q(p) = x[j] + gamma * (x[j+1] - x[j]) with h = (m - 1) * p + 1,
    j = floor(h), gamma = h - j.
    """
    if not 0.0 <= lo < hi <= 1.0:
        raise BadConfig(f"quantile levels must satisfy 0 <= lo < hi <= 1, got {lo}, {hi}")
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInput("cannot take quantiles of an empty value set")
    if not np.all(np.isfinite(values)):
        raise BadShape("quantile input contains non-finite values")
    q_low, q_high = np.quantile(values, [lo, hi])
    return float(q_high - q_low)


def sensor_stats(tensor: GestureTensor, lo: float = 0.05, hi: float = 0.95) -> SensorStats:
    """Quantile spread of every sensor over the whole studentised tensor."""
    if not tensor.studentised:
        raise NotStudentised("sensor statistics are defined on the studentised tensor")
    if not 0.0 <= lo < hi <= 1.0:
        raise BadConfig(f"quantile levels must satisfy 0 <= lo < hi <= 1, got {lo}, {hi}")
    pooled = tensor.data.reshape(-1, tensor.data.shape[3])
    q_low = np.quantile(pooled, lo, axis=0)
    q_high = np.quantile(pooled, hi, axis=0)
    return SensorStats(
        lo=lo, hi=hi, q_low=q_low, q_high=q_high, dispersion=q_high - q_low
    )


def remap(eig: Eigengesture, stats: SensorStats, neutral=None) -> RemappedEigengesture:
    """Affinely map an eigengesture, channel by channel, into data units.

    Each channel is scaled so its quantile spread matches the data spread
    of that sensor, then shifted so the first frame sits at the neutral
    pose. A channel with spread below 1e-12 cannot be scaled; its scale is
    set to 0 (it renders as constant at neutral) and a warning is issued.
    """
    shape = eig.shape
    n_sensors = shape.shape[1]
    if neutral is None:
        neutral = np.zeros(n_sensors)
    neutral = np.asarray(neutral, dtype=np.float64)
    if neutral.shape != (n_sensors,):
        raise BadShape(f"neutral pose must have shape ({n_sensors},), got {neutral.shape}")
    if stats.dispersion.shape != (n_sensors,):
        raise BadShape(
            f"stats cover {stats.dispersion.shape[0]} sensors, shape has {n_sensors}"
        )

    scale = np.zeros(n_sensors)
    for s in range(n_sensors):
        spread = quantile_dispersion(shape[:, s], stats.lo, stats.hi)
        if spread < 1e-12:
            warnings.warn(
                f"eigengesture {eig.index} channel {SENSOR_NAMES[s]} is flat; "
                f"rendering it as constant at the neutral pose",
                FlatEigengestureChannelWarning,
                stacklevel=2,
            )
            continue
        scale[s] = stats.dispersion[s] / spread
    offset = neutral - shape[0, :] * scale
    return RemappedEigengesture(
        source=eig,
        scale=scale,
        offset=offset,
        values=shape * scale + offset,
        neutral_pose=neutral,
    )


def write_remapped(remapped: RemappedEigengesture, path):
    """Export the remapped values as delimited text, one row per frame."""
    lines = [
        "# " + ",".join(SENSOR_NAMES),
        "# scale: " + ",".join(repr(float(v)) for v in remapped.scale),
        "# offset: " + ",".join(repr(float(v)) for v in remapped.offset),
    ]
    for row in remapped.values:
        lines.append(",".join(repr(float(v)) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


# -- deterministic SVG rendering ---------------------------------------------

def _render_svg(path, figsize, draw):
    """Build a figure under the pinned style, render to SVG, write atomically."""
    with matplotlib.rc_context(PLOT_STYLE):
        fig = plt.figure(figsize=figsize)
        try:
            draw(fig)
            buf = io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return atomic_write_bytes(path, buf.getvalue())


def _check_timeseries(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != NUM_SENSORS:
        raise BadShape(
            f"time series must be (n, {NUM_SENSORS}), got {values.shape}"
        )
    return values


def emit_timeseries_plot(values, path, title: str = ""):
    """Two stacked panels: finger bends on top, palm channels below.

    The lower panel shows roll (dashed), pitch (dotted), and the three
    position channels.
    """
    values = _check_timeseries(values)
    time = np.arange(1, values.shape[0] + 1)

    def draw(fig):
        ax_bend, ax_palm = fig.subplots(2, 1, sharex=True)
        fig.subplots_adjust(hspace=0.28, left=0.09, right=0.97, top=0.92, bottom=0.09)
        for s, label in enumerate(FINGER_LABELS):
            ax_bend.plot(time, values[:, s], label=label)
        ax_bend.set_ylabel("finger bend")
        ax_bend.legend(loc="upper right", ncols=5, fontsize=8)
        if title:
            ax_bend.set_title(title)

        for s, label in zip(range(5, 8), ("X", "Y", "Z")):
            ax_palm.plot(time, values[:, s], label=label)
        ax_palm.plot(time, values[:, 8], linestyle="--", color="black", label="roll")
        ax_palm.plot(time, values[:, 9], linestyle=":", color="black", label="pitch")
        ax_palm.set_ylabel("palm position / tilt")
        ax_palm.set_xlabel("time sample")
        ax_palm.legend(loc="upper right", ncols=5, fontsize=8)

    return _render_svg(path, (8.0, 5.0), draw)


def emit_error_curve_plot(curve, path, title: str = ""):
    """Normalized reconstruction error against component count."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.ndim != 1 or curve.size == 0:
        raise BadShape(f"error curve must be a non-empty vector, got {curve.shape}")

    def draw(fig):
        ax = fig.subplots()
        fig.subplots_adjust(left=0.1, right=0.96, top=0.92, bottom=0.11)
        ax.plot(np.arange(1, curve.size + 1), curve)
        ax.set_xlabel("components n")
        ax.set_ylabel("normalized error d(n)")
        ax.set_ylim(bottom=0.0)
        if title:
            ax.set_title(title)

    return _render_svg(path, (6.4, 4.2), draw)


def emit_spectrum_plot(sigma, path, title: str = ""):
    """Singular values on a log scale against their index."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1 or sigma.size == 0:
        raise BadShape(f"spectrum must be a non-empty vector, got {sigma.shape}")

    def draw(fig):
        ax = fig.subplots()
        fig.subplots_adjust(left=0.1, right=0.96, top=0.92, bottom=0.11)
        positive = sigma > 0
        index = np.arange(1, sigma.size + 1)
        ax.semilogy(index[positive], sigma[positive], marker=".", linestyle="-")
        ax.set_xlabel("index")
        ax.set_ylabel("singular value")
        if title:
            ax.set_title(title)

    return _render_svg(path, (6.4, 4.2), draw)


# -- schematic hand-pose frames ----------------------------------------------

def _clamp(value: float, bounds) -> float:
    return float(min(max(value, bounds[0]), bounds[1]))


def _rotation(deg: float) -> np.ndarray:
    rad = np.deg2rad(deg)
    c, s = np.cos(rad), np.sin(rad)
    return np.array([[c, -s], [s, c]])


# Finger geometry: attachment point on the palm outline, base direction in
# degrees (90 = straight up), and segment lengths.
_PALM_HALF_W = 0.5
_PALM_HALF_H = 0.6
_FINGERS = (
    ((-0.62, 0.05), 135.0, (0.38, 0.28)),  # thumb, leftmost, angled outward
    ((-0.33, _PALM_HALF_H), 90.0, (0.5, 0.38)),
    ((-0.11, _PALM_HALF_H), 90.0, (0.55, 0.42)),
    ((0.11, _PALM_HALF_H), 90.0, (0.5, 0.38)),
    ((0.33, _PALM_HALF_H), 90.0, (0.42, 0.3)),
)


def _finger_points(base, base_dir_deg, lengths, curl_deg):
    """Polyline of one finger: two segments, each taking half the curl."""
    points = [np.asarray(base, dtype=np.float64)]
    direction = base_dir_deg
    for length in lengths:
        direction -= curl_deg / 2.0
        rad = np.deg2rad(direction)
        step = length * np.array([np.cos(rad), np.sin(rad)])
        points.append(points[-1] + step)
    return np.array(points)


def _draw_hand(ax, frame_values):
    """One schematic hand: palm rotated by roll, fingers curled by bends."""
    bends = frame_values[:5]
    roll_deg = _clamp(ROLL_DEG_PER_UNIT * frame_values[8], TILT_RANGE_DEG)
    pitch_deg = _clamp(PITCH_DEG_PER_UNIT * frame_values[9], TILT_RANGE_DEG)
    rot = _rotation(roll_deg)

    palm = np.array(
        [
            [-_PALM_HALF_W, -_PALM_HALF_H],
            [_PALM_HALF_W, -_PALM_HALF_H],
            [_PALM_HALF_W, _PALM_HALF_H],
            [-_PALM_HALF_W, _PALM_HALF_H],
        ]
    )
    palm = palm @ rot.T
    ax.fill(palm[:, 0], palm[:, 1], color="0.85", zorder=1)
    ax.plot(
        np.append(palm[:, 0], palm[0, 0]),
        np.append(palm[:, 1], palm[0, 1]),
        color="black",
        linewidth=1.2,
        zorder=2,
    )

    for bend, (base, base_dir, lengths) in zip(bends, _FINGERS):
        curl = _clamp(
            NEUTRAL_CURL_DEG + CURL_DEG_PER_UNIT * bend, CURL_RANGE_DEG
        )
        points = _finger_points(base, base_dir, lengths, curl) @ rot.T
        ax.plot(
            points[:, 0],
            points[:, 1],
            color="black",
            linewidth=2.2,
            solid_capstyle="round",
            zorder=3,
        )

    # Side-view inset: palm pitch against a thin horizontal reference.
    cx, cy, arm = 0.85, -1.35, 0.45
    ax.plot([cx - arm, cx + arm], [cy, cy], color="0.7", linewidth=0.8, zorder=1)
    tip = np.array([arm, 0.0]) @ _rotation(pitch_deg).T
    ax.plot(
        [cx - tip[0], cx + tip[0]],
        [cy - tip[1], cy + tip[1]],
        color="black",
        linewidth=1.6,
        zorder=2,
    )

    ax.set_xlim(-1.9, 1.9)
    ax.set_ylim(-1.9, 2.1)
    ax.set_aspect("equal")
    ax.axis("off")


def emit_pose_frames(remapped: RemappedEigengesture, frame_indices, path):
    """One schematic hand glyph per selected frame, left to right.

    Frame indices are 1-based. Position channels are not rendered; only
    finger bends and the two palm angles shape the glyph.
    """
    frame_indices = [int(t) for t in frame_indices]
    if not frame_indices:
        raise FrameOutOfRange("no frames selected")
    n_time = remapped.n_time
    for t in frame_indices:
        if not 1 <= t <= n_time:
            raise FrameOutOfRange(f"frame {t} outside 1..{n_time}")

    def draw(fig):
        axes = fig.subplots(1, len(frame_indices), squeeze=False)[0]
        fig.subplots_adjust(left=0.02, right=0.98, top=0.88, bottom=0.04, wspace=0.05)
        for ax, t in zip(axes, frame_indices):
            _draw_hand(ax, remapped.values[t - 1])
            ax.set_title(f"t={t}", fontsize=9)

    return _render_svg(path, (2.1 * len(frame_indices), 3.1), draw)
