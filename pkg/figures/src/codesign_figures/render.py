"""Render static figures from experiment CSVs.

Four figure kinds cover the study's plot shapes:

* ``convergence`` -- per-iteration trace with the cost sum on the left
  axis and the information determinant on the right one,
* ``contour``     -- cost contours over a two-parameter sweep grid,
* ``lines``       -- one or more y columns against an x column, with an
  optional grouping column producing one curve per group,
* ``tradeoff``    -- stacked cost / CRB panels against the sweep value.

Rows sharing an x point (for example several seeds) are averaged.  The
renderer only reads the documented CSV schemas; it never recomputes any
science, and with fixed inputs the emitted SVG is byte-stable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

# fixed hash salt keeps SVG element ids reproducible across runs
matplotlib.rcParams["svg.hashsalt"] = "codesign-figures"

KINDS = ("convergence", "contour", "lines", "tradeoff")


class RenderError(ValueError):
    pass


class SchemaError(RenderError):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: Path
    x: str = "value"
    y: tuple = ()
    group: str | None = None
    z: str = "lqr_sum"
    levels: int = 12
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; "
                              f"choose from {', '.join(KINDS)}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)


def load_table(path: Path) -> dict[str, list[float]]:
    """CSV file as column lists; everything except 'scheme' is numeric."""
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise RenderError(f"empty input: {path}")
        columns = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, value in row.items():
                columns[name].append(
                    value if name == "scheme" else float(value))
    if not next(iter(columns.values()), []):
        raise RenderError(f"no data rows in {path}")
    return columns


def _require(table: dict, names, path) -> None:
    for name in names:
        if name not in table:
            raise SchemaError(f"missing column {name!r} in {path}")


def _mean_by(keys, values):
    """Average values sharing a key, returned in sorted key order."""
    acc: dict = {}
    for k, v in zip(keys, values):
        acc.setdefault(k, []).append(v)
    out_k = sorted(acc)
    return out_k, [sum(acc[k]) / len(acc[k]) for k in out_k]


def _finish(fig, spec: FigureSpec) -> Path:
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, metadata={"Date": None})
    plt.close(fig)
    return spec.output


def _render_convergence(spec: FigureSpec) -> Path:
    table = load_table(spec.inputs[0])
    _require(table, ("iter", "lqr_sum", "det_fim"), spec.inputs[0])
    fig, ax_cost = plt.subplots(figsize=(6.0, 4.0))
    ax_det = ax_cost.twinx()
    ax_cost.plot(table["iter"], table["lqr_sum"], "o-", color="tab:blue",
                 label="cost sum")
    ax_det.plot(table["iter"], table["det_fim"], "s--", color="tab:red",
                label="information determinant")
    ax_cost.set_xlabel("iteration")
    ax_cost.set_ylabel("sum of control costs", color="tab:blue")
    ax_det.set_ylabel("information determinant", color="tab:red")
    ax_cost.grid(alpha=0.3)
    if spec.title:
        ax_cost.set_title(spec.title)
    fig.tight_layout()
    return _finish(fig, spec)


def _render_contour(spec: FigureSpec) -> Path:
    table = load_table(spec.inputs[0])
    _require(table, ("value", "value2", spec.z), spec.inputs[0])
    pairs = {}
    for v1, v2, z in zip(table["value"], table["value2"], table[spec.z]):
        pairs.setdefault((v1, v2), []).append(z)
    xs = sorted({k[0] for k in pairs})
    ys = sorted({k[1] for k in pairs})
    grid = [[math.nan] * len(xs) for _ in ys]
    for (v1, v2), vals in pairs.items():
        grid[ys.index(v2)][xs.index(v1)] = sum(vals) / len(vals)
    if any(math.isnan(v) for row in grid for v in row):
        raise RenderError("sweep grid is incomplete: every (value, value2) "
                          "pair needs at least one row")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    contours = ax.contour(xs, ys, grid, levels=spec.levels, cmap="viridis")
    ax.clabel(contours, inline=True, fontsize=8)
    ax.set_xlabel("power budget (dBW)")
    ax.set_ylabel("observation noise variance")
    ax.set_yscale("log")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return _finish(fig, spec)


def _render_lines(spec: FigureSpec) -> Path:
    y_cols = spec.y or ("lqr_sum",)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    markers = "os^vDPX*"
    series = 0
    for path in spec.inputs:
        table = load_table(path)
        _require(table, (spec.x, *y_cols), path)
        if spec.group is not None:
            _require(table, (spec.group,), path)
            groups = sorted(set(table[spec.group]), key=str)
            for gval in groups:
                idx = [i for i, g in enumerate(table[spec.group])
                       if g == gval]
                for y_col in y_cols:
                    xs, ys = _mean_by([table[spec.x][i] for i in idx],
                                      [table[y_col][i] for i in idx])
                    label = (f"{gval}" if len(y_cols) == 1
                             else f"{gval} {y_col}")
                    ax.plot(xs, ys, marker=markers[series % len(markers)],
                            label=label)
                    series += 1
        else:
            for y_col in y_cols:
                xs, ys = _mean_by(table[spec.x], table[y_col])
                label = y_col if len(spec.inputs) == 1 \
                    else f"{Path(path).stem} {y_col}"
                ax.plot(xs, ys, marker=markers[series % len(markers)],
                        label=label)
                series += 1
    ax.set_xlabel(spec.x)
    ax.set_ylabel(", ".join(y_cols))
    ax.grid(alpha=0.3)
    ax.legend()
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return _finish(fig, spec)


def _render_tradeoff(spec: FigureSpec) -> Path:
    table = load_table(spec.inputs[0])
    _require(table, ("value", "lqr_sum", "crb_sum"), spec.inputs[0])
    fig, (ax_cost, ax_crb) = plt.subplots(2, 1, figsize=(6.0, 6.0),
                                          sharex=True)
    xs, cost = _mean_by(table["value"], table["lqr_sum"])
    _, crb = _mean_by(table["value"], table["crb_sum"])
    ax_cost.plot(xs, cost, "o-", color="tab:blue")
    ax_cost.set_ylabel("sum of control costs")
    ax_cost.grid(alpha=0.3)
    ax_crb.plot(xs, crb, "s-", color="tab:red")
    ax_crb.set_ylabel("sum CRB (m$^2$)")
    ax_crb.set_xlabel("trade-off weight")
    ax_crb.grid(alpha=0.3)
    if spec.title:
        ax_cost.set_title(spec.title)
    fig.tight_layout()
    return _finish(fig, spec)


_RENDERERS = {
    "convergence": _render_convergence,
    "contour": _render_contour,
    "lines": _render_lines,
    "tradeoff": _render_tradeoff,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path.

    Nothing is written when validation fails.
    """
    if not spec.inputs:
        raise RenderError("at least one input CSV is required")
    return _RENDERERS[spec.kind](spec)
