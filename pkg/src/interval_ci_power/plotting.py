"""Static coverage-versus-psi plots."""

import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .mc_engine import PowerPoint  # noqa: E402

logger = logging.getLogger(__name__)


def plot_power_curves(
    points: Iterable[PowerPoint], path: Union[str, Path], alpha: float
) -> Path:
    """
    Draw coverage against psi for each (CI kind, n) and channel.

    Efficient channels are solid lines, inefficient ones dashed; the nominal
    level 1 - alpha is a horizontal reference line.

    Args:
        points: PowerPoints from power_curve
        path: Output file; the format follows the suffix (SVG by default)
        alpha: Significance level

    Returns:
        The written path
    """
    curves = defaultdict(list)
    for point in points:
        if not math.isnan(point.psi):
            curves[(point.ci_kind.value, point.n)].append(point)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (kind, n), series in sorted(curves.items()):
        series.sort(key=lambda p: p.psi)
        psi = [p.psi for p in series]
        line = ax.plot(psi, [p.cover_rate_e for p in series], marker="o", label=f"{kind} E, n={n}")[0]
        ax.plot(
            psi,
            [p.cover_rate_i for p in series],
            marker="s",
            linestyle="--",
            color=line.get_color(),
            label=f"{kind} I, n={n}",
        )
    ax.axhline(1.0 - alpha, color="grey", linewidth=0.8, linestyle=":")
    ax.set_xlabel("psi")
    ax.set_ylabel("coverage probability")
    ax.set_ylim(0.0, 1.0)
    ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()

    path = Path(path)
    if not path.suffix:
        path = path.with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    logger.info(f"Wrote power curve plot to {path}")
    return path
