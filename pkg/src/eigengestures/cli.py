"""Command-line front end: composes the pipeline stages into subcommands
with a reproducible run configuration and a machine-readable run report.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

from . import __version__
from ._atomic import atomic_write_text
from .dataset import (
    DEFAULT_RESAMPLE_LENGTH,
    SENSOR_NAMES,
    SynthConfig,
    load_corpus,
    save_corpus,
    synthesize_corpus,
)
from .decomposition import (
    error_curve,
    eigengestures,
    mean_column_error_curve,
    reconstruct_gesture,
    svd,
    write_error_curve,
    write_spectrum,
)
from .errors import BadConfig, EigengestureError, IoFailure
from .preprocess import dump_data_matrix, preprocess_corpus
from .visualize import (
    emit_error_curve_plot,
    emit_pose_frames,
    emit_spectrum_plot,
    emit_timeseries_plot,
    remap,
    sensor_stats,
    write_remapped,
)

EMIT_TOKENS = ("spectrum", "error_curve", "eigengestures", "reconstruction", "plots")
REPORT_RANKS = (1, 20, 50, 100)


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run depends on, in one place."""

    output_dir: Path
    input_path: Path | None = None
    synth: SynthConfig | None = None
    resample_length: int = DEFAULT_RESAMPLE_LENGTH
    n_types: int | None = None
    n_realisations: int | None = None
    order: str = "paper"
    quantiles: tuple = (0.05, 0.95)
    seed: int | None = None
    emit: frozenset = frozenset()
    rank: int | None = None
    gesture: tuple | None = None
    eigengesture_count: int = 5
    mean_columns: bool = False

    def validate(self) -> None:
        if (self.input_path is None) == (self.synth is None):
            raise BadConfig("exactly one of --input and --synth must be given")
        if self.resample_length < 2:
            raise BadConfig(f"resample length must be >= 2, got {self.resample_length}")
        lo, hi = self.quantiles
        if not 0.0 <= lo < hi <= 1.0:
            raise BadConfig(f"quantiles must satisfy 0 <= lo < hi <= 1, got {lo}, {hi}")
        if self.order not in ("paper", "physical"):
            raise BadConfig(f"order must be 'paper' or 'physical', got {self.order!r}")
        unknown = self.emit - set(EMIT_TOKENS)
        if unknown:
            raise BadConfig(
                f"unknown emit token(s) {sorted(unknown)}; "
                f"choose from {', '.join(EMIT_TOKENS)}"
            )
        if "reconstruction" in self.emit:
            if self.gesture is None:
                raise BadConfig("emitting a reconstruction requires --gesture K:L")
            if self.rank is None:
                raise BadConfig("emitting a reconstruction requires --rank")

    def effective_synth(self) -> SynthConfig | None:
        if self.synth is None:
            return None
        if self.seed is None:
            return self.synth
        return dataclasses.replace(self.synth, seed=self.seed)

    def echo(self) -> dict:
        """Config as JSON-ready data; excludes output_dir so reports from
        identical runs into different directories stay byte-identical."""
        synth = self.effective_synth()
        return {
            "input": str(self.input_path) if self.input_path is not None else None,
            "synth": dataclasses.asdict(synth) if synth is not None else None,
            "resample_length": self.resample_length,
            "n_types": self.n_types,
            "n_realisations": self.n_realisations,
            "order": self.order,
            "quantiles": list(self.quantiles),
            "seed": self.seed,
            "emit": sorted(self.emit),
            "rank": self.rank,
            "gesture": list(self.gesture) if self.gesture is not None else None,
            "eigengesture_count": self.eigengesture_count,
            "mean_columns": self.mean_columns,
        }


def _load_inputs(config: RunConfig):
    """Load or synthesize the corpus. Runs before any output is created so
    a bad input leaves the output directory untouched."""
    if config.input_path is not None:
        recordings, _ = load_corpus(config.input_path)
        return recordings
    return synthesize_corpus(config.effective_synth())


def _ensure_output_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out}: {exc}") from exc
    return out


def _prepare(config: RunConfig):
    """Shared front half of every run: load, preprocess, decompose."""
    config.validate()
    recordings = _load_inputs(config)
    matrix, tensor = preprocess_corpus(
        recordings,
        n_time=config.resample_length,
        order=config.order,
        n_types=config.n_types,
        n_realisations=config.n_realisations,
    )
    return recordings, matrix, tensor


def _base_report(config: RunConfig, matrix) -> dict:
    return {
        "versions": {
            "eigengestures": __version__,
            "numpy": np.__version__,
            "matplotlib": matplotlib.__version__,
            "python": platform.python_version(),
        },
        "config": config.echo(),
        "matrix": {
            "rows": matrix.values.shape[0],
            "columns": matrix.values.shape[1],
        },
    }


def _spectrum_summary(decomposition) -> dict:
    sigma = decomposition.sigma
    fractions = decomposition.energy_fractions()
    top = min(10, sigma.size)
    return {
        "q": int(sigma.size),
        "sigma_1": float(sigma[0]),
        "sigma_q": float(sigma[-1]),
        "count_above_1e8_sigma1": int(np.sum(sigma > 1e-8 * sigma[0]))
        if sigma[0] > 0
        else 0,
        "energy_top_10": float(np.sum(fractions[:top])),
    }


def _default_frames(n_time: int) -> list:
    count = min(5, n_time)
    return sorted({int(round(t)) for t in np.linspace(1, n_time, count)})


def _write_report(out: Path, report: dict) -> Path:
    return atomic_write_text(
        out / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n"
    )


def _write_timeseries_csv(values, path):
    lines = ["# " + ",".join(SENSOR_NAMES)]
    for row in values:
        lines.append(",".join(repr(float(v)) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def run_pipeline(config: RunConfig) -> dict:
    """Full pipeline: load or synthesize, preprocess, decompose, emit.

    Which artifacts land in the output directory is driven by config.emit;
    the run report (report.json) is always written. Returns the report.
    """
    recordings, matrix, tensor = _prepare(config)
    decomposition = svd(matrix)
    out = _ensure_output_dir(config)
    plots = "plots" in config.emit

    report = _base_report(config, matrix)
    report["spectrum"] = _spectrum_summary(decomposition)
    curve = error_curve(matrix, decomposition)
    report["error_curve"] = {
        f"d_{n}": float(curve[n - 1]) for n in REPORT_RANKS if n <= decomposition.q
    }

    if "spectrum" in config.emit:
        write_spectrum(decomposition, out / "spectrum.csv")
        if plots:
            emit_spectrum_plot(decomposition.sigma, out / "spectrum.svg")

    if "error_curve" in config.emit:
        write_error_curve(curve, out / "error_curve.csv")
        if config.mean_columns:
            write_error_curve(
                mean_column_error_curve(matrix, decomposition),
                out / "error_curve_column_mean.csv",
            )
        if plots:
            emit_error_curve_plot(curve, out / "error_curve.svg")

    if "eigengestures" in config.emit:
        lo, hi = config.quantiles
        stats = sensor_stats(tensor, lo, hi)
        frames = _default_frames(matrix.n_time)
        for eig in eigengestures(decomposition, config.eigengesture_count):
            remapped = remap(eig, stats)
            stem = f"eigengesture_{eig.index:02d}"
            write_remapped(remapped, out / f"{stem}.csv")
            if plots:
                emit_timeseries_plot(
                    remapped.values,
                    out / f"{stem}.svg",
                    title=f"eigengesture {eig.index}",
                )
                emit_pose_frames(remapped, frames, out / f"{stem}_poses.svg")

    if "reconstruction" in config.emit:
        _emit_reconstruction(config, matrix, tensor, decomposition, out, report)

    _write_report(out, report)
    return report


def _emit_reconstruction(config, matrix, tensor, decomposition, out, report):
    k, l = config.gesture
    col = matrix.column_of(k, l)
    original = tensor.data[k - 1, l - 1]
    approx = reconstruct_gesture(decomposition, (k, l), config.rank)
    stem = f"gesture_{k:02d}_{l:02d}"

    _write_timeseries_csv(original, out / f"{stem}_original.csv")
    _write_timeseries_csv(approx, out / f"{stem}_rank{config.rank}.csv")
    if "plots" in config.emit:
        emit_timeseries_plot(
            original, out / f"{stem}_original.svg", title=f"gesture {k}:{l}"
        )
        emit_timeseries_plot(
            approx,
            out / f"{stem}_rank{config.rank}.svg",
            title=f"gesture {k}:{l}, rank {config.rank}",
        )

    residual = float(np.linalg.norm(original - approx))
    tail = decomposition.sigma[config.rank :] ** 2
    weights = decomposition.v[col, config.rank :] ** 2
    report["reconstruction"] = {
        "gesture": [k, l],
        "rank": config.rank,
        "residual_frobenius": residual,
        "residual_predicted": float(np.sqrt(np.sum(tail * weights))),
    }


def cmd_reconstruct(config: RunConfig) -> dict:
    """Original-versus-reconstruction artifact for one realisation."""
    if config.gesture is None:
        raise BadConfig("reconstruct requires --gesture K:L")
    if config.rank is None:
        raise BadConfig("reconstruct requires --rank")
    config = dataclasses.replace(
        config, emit=frozenset(config.emit) | {"reconstruction"}
    )
    recordings, matrix, tensor = _prepare(config)
    decomposition = svd(matrix)
    out = _ensure_output_dir(config)

    report = _base_report(config, matrix)
    report["spectrum"] = _spectrum_summary(decomposition)
    _emit_reconstruction(config, matrix, tensor, decomposition, out, report)
    _write_report(out, report)
    return report


def cmd_render(config: RunConfig) -> dict:
    """Preprocessed time series of one realisation, as text and plot."""
    if config.gesture is None:
        raise BadConfig("render requires --gesture K:L")
    recordings, matrix, tensor = _prepare(config)
    out = _ensure_output_dir(config)
    k, l = config.gesture
    matrix.column_of(k, l)
    values = tensor.data[k - 1, l - 1]
    stem = f"gesture_{k:02d}_{l:02d}"
    _write_timeseries_csv(values, out / f"{stem}.csv")
    emit_timeseries_plot(values, out / f"{stem}.svg", title=f"gesture {k}:{l}")

    report = _base_report(config, matrix)
    _write_report(out, report)
    return report


def cmd_preprocess(config: RunConfig) -> dict:
    """Stop after flattening; dump the data matrix for external tools."""
    recordings, matrix, tensor = _prepare(config)
    out = _ensure_output_dir(config)
    dump_data_matrix(matrix, out / "data_matrix.csv", tensor)
    report = _base_report(config, matrix)
    _write_report(out, report)
    return report


def cmd_synth(config: RunConfig) -> Path:
    """Write a synthetic corpus in the on-disk corpus layout."""
    config.validate()
    recordings = synthesize_corpus(config.effective_synth())
    return save_corpus(recordings, config.output_dir)


# -- argument parsing --------------------------------------------------------

def _parse_synth_spec(text: str) -> SynthConfig:
    """Parse 'key=value,...' into a SynthConfig; empty means all defaults.

    Keys: types, reals, rank, noise, lengths (min:max), seed.
    """
    kwargs = {}
    if text.strip():
        for item in text.split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not value:
                raise BadConfig(f"bad synth option {item!r}, expected key=value")
            try:
                if key == "types":
                    kwargs["n_types"] = int(value)
                elif key == "reals":
                    kwargs["n_realisations"] = int(value)
                elif key == "rank":
                    kwargs["true_rank"] = int(value)
                elif key == "noise":
                    kwargs["noise_sigma"] = float(value)
                elif key == "seed":
                    kwargs["seed"] = int(value)
                elif key == "lengths":
                    lo, sep2, hi = value.partition(":")
                    if not sep2:
                        raise ValueError("expected min:max")
                    kwargs["length_range"] = (int(lo), int(hi))
                else:
                    raise BadConfig(
                        f"unknown synth option {key!r}; "
                        f"known: types, reals, rank, noise, lengths, seed"
                    )
            except ValueError as exc:
                raise BadConfig(f"bad synth option {item!r}: {exc}") from exc
    config = SynthConfig(**kwargs)
    config.validate()
    return config


def _parse_gesture(text: str) -> tuple:
    k, sep, l = text.partition(":")
    try:
        if not sep:
            raise ValueError("expected K:L")
        pair = (int(k), int(l))
    except ValueError as exc:
        raise BadConfig(f"bad --gesture value {text!r}: {exc}") from exc
    if pair[0] < 1 or pair[1] < 1:
        raise BadConfig(f"--gesture indices must be >= 1, got {text!r}")
    return pair


def _parse_quantiles(text: str) -> tuple:
    lo, sep, hi = text.partition(",")
    try:
        if not sep:
            raise ValueError("expected lo,hi")
        pair = (float(lo), float(hi))
    except ValueError as exc:
        raise BadConfig(f"bad --quantiles value {text!r}: {exc}") from exc
    return pair


def _parse_emit(text: str) -> frozenset:
    tokens = frozenset(t.strip() for t in text.split(",") if t.strip())
    if not tokens:
        raise BadConfig("--emit must name at least one artifact")
    return tokens


def _add_io_options(parser, *, needs_input=True):
    if needs_input:
        parser.add_argument("--input", metavar="MANIFEST", help="corpus manifest path")
    parser.add_argument(
        "--synth",
        metavar="SPEC",
        nargs="?",
        const="",
        help="use a synthetic corpus; SPEC is 'types=22,reals=20,rank=8,"
        "noise=0.05,lengths=39:153,seed=0' (all optional)",
    )
    parser.add_argument("--out", metavar="DIR", required=True, help="output directory")
    parser.add_argument("--seed", type=int, help="override the synthetic corpus seed")


def _add_pipeline_options(parser):
    parser.add_argument(
        "--resample-n",
        type=int,
        default=DEFAULT_RESAMPLE_LENGTH,
        metavar="N",
        help="resample length (default %(default)s)",
    )
    parser.add_argument(
        "--order",
        choices=("paper", "physical"),
        default="paper",
        help="'paper' integrates after resampling, 'physical' before (default paper)",
    )
    parser.add_argument(
        "--quantiles",
        metavar="LO,HI",
        default="0.05,0.95",
        help="quantile levels for the visual remap (default %(default)s)",
    )
    parser.add_argument(
        "--types", type=int, metavar="K", help="restrict to the first K gesture types"
    )
    parser.add_argument(
        "--realisations",
        type=int,
        metavar="L",
        help="restrict to the first L realisations per type",
    )
    parser.add_argument(
        "--gesture",
        type=_parse_gesture,
        metavar="K:L",
        help="realisation to reconstruct or render",
    )
    parser.add_argument("--rank", type=int, metavar="N", help="reconstruction rank")
    parser.add_argument(
        "--count", type=int, default=5, help="how many eigengestures (default 5)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigengestures",
        description="Eigengesture pipeline: preprocess glove recordings, "
        "decompose them, and emit spectra, error curves, eigengestures, "
        "and reconstructions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate and write a synthetic corpus")
    _add_io_options(p, needs_input=False)
    p.set_defaults(func=_run_synth)

    p = sub.add_parser("preprocess", help="dump the preprocessed data matrix")
    _add_io_options(p)
    _add_pipeline_options(p)
    p.set_defaults(func=_run_preprocess)

    p = sub.add_parser("decompose", help="decompose and export the spectrum")
    _add_io_options(p)
    _add_pipeline_options(p)
    p.add_argument("--emit", type=_parse_emit, default=frozenset({"spectrum", "plots"}))
    p.set_defaults(func=_run_pipeline_cmd)

    p = sub.add_parser("error-curve", help="export the reconstruction error curve")
    _add_io_options(p)
    _add_pipeline_options(p)
    p.add_argument(
        "--emit", type=_parse_emit, default=frozenset({"error_curve", "plots"})
    )
    p.add_argument(
        "--mean-columns",
        action="store_true",
        help="also export the mean of per-realisation error curves",
    )
    p.set_defaults(func=_run_pipeline_cmd)

    p = sub.add_parser("eigengestures", help="export remapped eigengestures")
    _add_io_options(p)
    _add_pipeline_options(p)
    p.add_argument(
        "--emit", type=_parse_emit, default=frozenset({"eigengestures", "plots"})
    )
    p.set_defaults(func=_run_pipeline_cmd)

    p = sub.add_parser(
        "reconstruct", help="original versus low-rank reconstruction of one gesture"
    )
    _add_io_options(p)
    _add_pipeline_options(p)
    p.add_argument("--emit", type=_parse_emit, default=frozenset({"plots"}))
    p.set_defaults(func=_run_reconstruct)

    p = sub.add_parser("render", help="plot one preprocessed gesture")
    _add_io_options(p)
    _add_pipeline_options(p)
    p.set_defaults(func=_run_render)

    return parser


def _config_from_args(args) -> RunConfig:
    synth = None
    if getattr(args, "synth", None) is not None:
        synth = _parse_synth_spec(args.synth)
    input_path = getattr(args, "input", None)
    return RunConfig(
        output_dir=Path(args.out),
        input_path=Path(input_path) if input_path else None,
        synth=synth,
        resample_length=getattr(args, "resample_n", DEFAULT_RESAMPLE_LENGTH),
        n_types=getattr(args, "types", None),
        n_realisations=getattr(args, "realisations", None),
        order=getattr(args, "order", "paper"),
        quantiles=_parse_quantiles(getattr(args, "quantiles", "0.05,0.95")),
        seed=args.seed,
        emit=frozenset(getattr(args, "emit", frozenset())),
        rank=getattr(args, "rank", None),
        gesture=getattr(args, "gesture", None),
        eigengesture_count=getattr(args, "count", 5),
        mean_columns=getattr(args, "mean_columns", False),
    )


def _run_synth(args) -> int:
    if args.synth is None:
        raise BadConfig("synth requires --synth (use '--synth' alone for defaults)")
    manifest_path = cmd_synth(_config_from_args(args))
    print(manifest_path)
    return 0


def _run_preprocess(args) -> int:
    cmd_preprocess(_config_from_args(args))
    return 0


def _run_pipeline_cmd(args) -> int:
    report = run_pipeline(_config_from_args(args))
    for key, value in sorted(report.get("error_curve", {}).items()):
        print(f"{key} = {value:.6g}")
    return 0


def _run_reconstruct(args) -> int:
    report = cmd_reconstruct(_config_from_args(args))
    info = report["reconstruction"]
    print(
        f"gesture {info['gesture'][0]}:{info['gesture'][1]} rank {info['rank']} "
        f"residual {info['residual_frobenius']:.6g}"
    )
    return 0


def _run_render(args) -> int:
    cmd_render(_config_from_args(args))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except EigengestureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
