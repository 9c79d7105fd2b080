"""Data series for the standard figures (no plotting)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from nonlinfo import classical
from nonlinfo.coding import channel_rate_bound, source_cluster_rate
from nonlinfo.families import EnumeratedFamily, IntervalBernoulli, IntervalBSC
from nonlinfo.measures import nonlinear_entropy
from nonlinfo.optimize import DEFAULT, OptimizerConfig
from nonlinfo.sampling import (
    DEFAULT_P_GRID,
    Fixed,
    PerBlockUniform,
    bernoulli_fit_confidence,
    sample_source,
    window_stats,
)

UNCERTAIN_SOURCE = (1 / 3, 1 / 2)
FIG8_P = 0.58
FIG_LENGTH = 10000


@dataclass
class FigureData:
    figure: str
    columns: dict  # name -> list, first column is the abscissa

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        names = list(self.columns)
        w.writerow(names)
        for row in zip(*(self.columns[n] for n in names)):
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"figure": self.figure, "columns": self.columns}


def p_grid(step: float = 0.01) -> np.ndarray:
    count = int(round(1 / step))
    return np.round(np.arange(count + 1) / count, 12)


def _label(eps: float) -> str:
    return f"{eps:g}"


def fig2(eps_list=(0.0, 0.05, 0.1), step: float = 0.01) -> FigureData:
    ps = p_grid(step)
    cols = {"p": ps.tolist()}
    for e in eps_list:
        cols[f"entropy_eps_{_label(e)}"] = [nonlinear_entropy(IntervalBernoulli(p, e)).value for p in ps]
    return FigureData("2", cols)


def fig3(seed: int = 0, length: int = 1024, block_len: int = 500, grid=DEFAULT_P_GRID) -> FigureData:
    fam = IntervalBernoulli.from_bounds(*UNCERTAIN_SOURCE)
    x = sample_source(fam, PerBlockUniform(block_len), length, seed).symbols
    fit = bernoulli_fit_confidence(x, grid)
    return FigureData("3", {"p": [p for p, _ in fit], "confidence": [c for _, c in fit]})


def fig4(eps_list=(0.02, 0.03), step: float = 0.01) -> FigureData:
    ps = p_grid(step)
    cols = {"p": ps.tolist()}
    for e in eps_list:
        fams = [IntervalBernoulli(p, e) for p in ps]
        cols[f"cluster_rate_eps_{_label(e)}"] = [source_cluster_rate(f) for f in fams]
        cols[f"entropy_eps_{_label(e)}"] = [nonlinear_entropy(f).value for f in fams]
    cols["shannon_entropy"] = [float(classical.binary_entropy(p)) for p in ps]
    return FigureData("4", cols)


def fig6(eps_list=(0.0, 0.02, 0.04), step: float = 0.01, config: OptimizerConfig = DEFAULT) -> FigureData:
    ps = p_grid(step)
    cols = {"p": ps.tolist()}
    for e in eps_list:
        cols[f"capacity_eps_{_label(e)}"] = [channel_rate_bound(IntervalBSC(p, e), config).value for p in ps]
    cols["shannon_capacity"] = [float(1 - classical.binary_entropy(p)) for p in ps]
    return FigureData("6", cols)


def _window_figure(name, samples) -> FigureData:
    ws = window_stats(samples)
    return FigureData(name, {"n": ws.n.tolist(), "upper_mean": ws.upper.tolist(), "lower_mean": ws.lower.tolist()})


def fig7(seed: int = 0, length: int = FIG_LENGTH, block_len: int = 500) -> FigureData:
    fam = IntervalBernoulli.from_bounds(*UNCERTAIN_SOURCE)
    return _window_figure("7", sample_source(fam, PerBlockUniform(block_len), length, seed).symbols)


def fig8(seed: int = 0, length: int = FIG_LENGTH, p: float = FIG8_P) -> FigureData:
    fam = EnumeratedFamily.singleton([1 - p, p])
    return _window_figure("8", sample_source(fam, Fixed(0), length, seed).symbols)


FIGURES = {"2": fig2, "3": fig3, "4": fig4, "6": fig6, "7": fig7, "8": fig8}
