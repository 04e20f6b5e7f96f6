#!/usr/bin/env python3
"""Rebuild the frozen golden SVGs under tests/goldens.

Run this after a deliberate change to the plot emitters or a matplotlib
upgrade, then review the files visually before committing.
"""

import json
import sys
from pathlib import Path

import matplotlib

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from _golden_data import (  # noqa: E402
    golden_error_curve,
    golden_remapped,
    golden_spectrum,
    zigzag_timeseries,
)

from eigengestures.visualize import (  # noqa: E402
    emit_error_curve_plot,
    emit_pose_frames,
    emit_spectrum_plot,
    emit_timeseries_plot,
)


def main() -> int:
    golden_dir = REPO / "tests" / "goldens"
    golden_dir.mkdir(parents=True, exist_ok=True)

    emit_timeseries_plot(
        zigzag_timeseries(), golden_dir / "timeseries.svg", title="golden gesture"
    )
    emit_pose_frames(golden_remapped(), [1, 10, 20], golden_dir / "poses.svg")
    emit_error_curve_plot(golden_error_curve(), golden_dir / "error_curve.svg")
    emit_spectrum_plot(golden_spectrum(), golden_dir / "spectrum.svg")

    meta = {"matplotlib": matplotlib.__version__}
    (golden_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for path in sorted(golden_dir.iterdir()):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
