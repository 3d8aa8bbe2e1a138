"""Grid sweeps of the c-index over (p0, rr), contour extraction, and figures.

A :class:`MeasureGrid` fixes the risk factor prevalence and evaluates the
c-index on a (p0, rr) lattice. Cells where rr * p0 would exceed 1 are
masked rather than errored so that sweeps degrade gracefully at
infeasible corners. Because the attributable risk is a bijection of rr at
fixed prevalence, each rr row also carries its PAR value; the figure uses
that as the alternative labeling of the rr axis.

Contours come from marching squares with linear interpolation along cell
edges. The field is strictly monotone in both directions wherever rr > 1,
so the only ambiguity, the two saddle cases, is settled by the sign of
the cell-centre mean. Cells touching a masked corner emit nothing: masked
regions sit outside every level.

The SVG writer is deliberately small and fully deterministic: the same
grids produce the same bytes, with no timestamps, random ids, or external
resources.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParamsError, RenderError
from .measures import (
    PopulationParams,
    _require_finite,
    _require_prob,
    derive_measures,
    par,
)

__all__ = [
    "GridSpec",
    "MeasureGrid",
    "ContourSet",
    "evaluate_grid",
    "extract_contours",
    "render_svg",
    "grids_to_csv",
    "grids_to_json",
]


def _default_levels() -> tuple[float, ...]:
    return tuple(round(0.51 + 0.01 * k, 2) for k in range(10))


def _require_positive(value, name: str) -> float:
    x = _require_finite(value, name)
    if x <= 0.0:
        raise InvalidParamsError(f"{name} must be positive, got {x}")
    return x


@dataclass(frozen=True)
class GridSpec:
    """Sweep definition: prevalence panels, axis windows, lattice density.

    ``resolution`` is the number of samples per axis. The default window
    covers incidences up to 10% and relative risks up to 3, with contour
    levels every 0.01 from 0.51 to 0.60.
    """

    prevalences: tuple[float, ...] = (0.5, 0.2, 0.1)
    p0_min: float = 0.001
    p0_max: float = 0.10
    rr_min: float = 1.0
    rr_max: float = 3.0
    resolution: int = 201
    contour_levels: tuple[float, ...] = field(default_factory=_default_levels)

    def __post_init__(self) -> None:
        prevalences = tuple(
            _require_prob(v, "prevalence", open_interval=True) for v in self.prevalences
        )
        if not prevalences:
            raise InvalidParamsError("at least one prevalence panel is required")
        object.__setattr__(self, "prevalences", prevalences)
        p0_min = _require_prob(self.p0_min, "p0_min", open_interval=True)
        p0_max = _require_prob(self.p0_max, "p0_max", open_interval=True)
        if not p0_min < p0_max:
            raise InvalidParamsError(
                f"p0_min must lie below p0_max, got [{p0_min:g}, {p0_max:g}]"
            )
        object.__setattr__(self, "p0_min", p0_min)
        object.__setattr__(self, "p0_max", p0_max)
        rr_min = _require_positive(self.rr_min, "rr_min")
        rr_max = _require_positive(self.rr_max, "rr_max")
        if not rr_min < rr_max:
            raise InvalidParamsError(
                f"rr_min must lie below rr_max, got [{rr_min:g}, {rr_max:g}]"
            )
        object.__setattr__(self, "rr_min", rr_min)
        object.__setattr__(self, "rr_max", rr_max)
        if isinstance(self.resolution, bool) or not isinstance(self.resolution, int):
            raise InvalidParamsError(f"resolution must be an integer, got {self.resolution!r}")
        if self.resolution < 2:
            raise InvalidParamsError(
                f"resolution must be at least 2 samples per axis, got {self.resolution}"
            )
        levels = tuple(_require_finite(v, "contour_level") for v in self.contour_levels)
        object.__setattr__(self, "contour_levels", levels)


@dataclass(frozen=True, eq=False)
class MeasureGrid:
    """Evaluated c-index lattice at one prevalence.

    ``c_values`` is indexed [rr, p0]; masked cells (rr * p0 > 1) hold NaN.
    ``par_axis`` pairs each rr with its attributable risk at this
    prevalence.
    """

    prevalence: float
    p0_axis: np.ndarray
    rr_axis: np.ndarray
    c_values: np.ndarray
    par_axis: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "prevalence", _require_prob(self.prevalence, "prevalence", open_interval=True))
        object.__setattr__(self, "p0_axis", np.asarray(self.p0_axis, dtype=float))
        object.__setattr__(self, "rr_axis", np.asarray(self.rr_axis, dtype=float))
        object.__setattr__(self, "c_values", np.asarray(self.c_values, dtype=float))
        object.__setattr__(self, "par_axis", np.asarray(self.par_axis, dtype=float))
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))
        shape = (self.rr_axis.size, self.p0_axis.size)
        if self.c_values.shape != shape:
            raise InvalidParamsError(
                f"c_values shape {self.c_values.shape} does not match the axes {shape}"
            )
        if self.mask.shape != shape:
            raise InvalidParamsError(
                f"mask shape {self.mask.shape} does not match the axes {shape}"
            )
        if self.par_axis.shape != (self.rr_axis.size,):
            raise InvalidParamsError(
                f"par_axis must pair one value with each rr entry "
                f"({self.rr_axis.size}), got shape {self.par_axis.shape}"
            )


@dataclass(frozen=True)
class ContourSet:
    """Iso-level polylines of one c-index level, vertices in (p0, rr)."""

    level: float
    polylines: tuple[tuple[tuple[float, float], ...], ...]


def evaluate_grid(spec: GridSpec, prevalence: float) -> MeasureGrid:
    """Evaluate the c-index lattice for one prevalence panel of ``spec``.

    Every unmasked cell is computed through :func:`derive_measures`, so
    grid values agree with direct scenario evaluation by construction.
    """
    if not isinstance(spec, GridSpec):
        raise InvalidParamsError(f"spec must be a GridSpec, got {type(spec).__name__}")
    if prevalence not in spec.prevalences:
        raise InvalidParamsError(
            f"prevalence {prevalence!r} is not one of the spec's panels {spec.prevalences}"
        )
    p0_axis = np.linspace(spec.p0_min, spec.p0_max, spec.resolution)
    rr_axis = np.linspace(spec.rr_min, spec.rr_max, spec.resolution)
    p0_values = [float(x) for x in p0_axis]
    rr_values = [float(x) for x in rr_axis]
    c_values = np.full((spec.resolution, spec.resolution), np.nan)
    mask = np.zeros((spec.resolution, spec.resolution), dtype=bool)
    for i, rr_value in enumerate(rr_values):
        row = c_values[i]
        for j, p0_value in enumerate(p0_values):
            if rr_value * p0_value > 1.0:
                mask[i, j] = True
                continue
            row[j] = derive_measures(
                PopulationParams(f=prevalence, p0=p0_value, rr=rr_value)
            ).c_index
    par_axis = np.array([par(prevalence, rr_value) for rr_value in rr_values])
    return MeasureGrid(
        prevalence=float(prevalence),
        p0_axis=p0_axis,
        rr_axis=rr_axis,
        c_values=c_values,
        par_axis=par_axis,
        mask=mask,
    )


# Marching squares. Corner bits: 1 = bottom-left above the level,
# 2 = bottom-right, 4 = top-right, 8 = top-left ("above" means strictly
# greater). Edges are oriented left-to-right / bottom-to-top so that the
# two cells sharing an edge compute bitwise-identical crossing points.
_EDGE_B, _EDGE_R, _EDGE_T, _EDGE_L = 0, 1, 2, 3

_SEGMENT_TABLE: dict[int, list[tuple[int, int]]] = {
    0: [],
    1: [(_EDGE_L, _EDGE_B)],
    2: [(_EDGE_B, _EDGE_R)],
    3: [(_EDGE_L, _EDGE_R)],
    4: [(_EDGE_R, _EDGE_T)],
    6: [(_EDGE_B, _EDGE_T)],
    7: [(_EDGE_L, _EDGE_T)],
    8: [(_EDGE_L, _EDGE_T)],
    9: [(_EDGE_B, _EDGE_T)],
    11: [(_EDGE_R, _EDGE_T)],
    12: [(_EDGE_L, _EDGE_R)],
    13: [(_EDGE_B, _EDGE_R)],
    14: [(_EDGE_L, _EDGE_B)],
    15: [],
}


def _edge_point(level, i, j, edge, p0_axis, rr_axis, values):
    if edge == _EDGE_B:
        (ia, ja), (ib, jb) = (i, j), (i, j + 1)
    elif edge == _EDGE_T:
        (ia, ja), (ib, jb) = (i + 1, j), (i + 1, j + 1)
    elif edge == _EDGE_L:
        (ia, ja), (ib, jb) = (i, j), (i + 1, j)
    else:
        (ia, ja), (ib, jb) = (i, j + 1), (i + 1, j + 1)
    va = float(values[ia, ja])
    vb = float(values[ib, jb])
    t = (level - va) / (vb - va)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    x = float(p0_axis[ja]) + t * (float(p0_axis[jb]) - float(p0_axis[ja]))
    y = float(rr_axis[ia]) + t * (float(rr_axis[ib]) - float(rr_axis[ia]))
    return (x, y)


def _stitch(segments):
    """Join segments sharing endpoints into polylines, deterministically."""
    adjacency: dict[tuple[float, float], list] = {}
    for k, (a, b) in enumerate(segments):
        adjacency.setdefault(a, []).append((k, b))
        adjacency.setdefault(b, []).append((k, a))
    used = [False] * len(segments)

    def walk(start):
        path = [start]
        current = start
        while True:
            step = None
            for k, other in adjacency[current]:
                if not used[k]:
                    used[k] = True
                    step = other
                    break
            if step is None:
                return path
            path.append(step)
            current = step

    polylines = []
    # open chains first, anchored at odd-degree endpoints, then cycles
    odd = sorted(pt for pt, nb in adjacency.items() if len(nb) % 2 == 1)
    for start in odd:
        while any(not used[k] for k, _ in adjacency[start]):
            polylines.append(walk(start))
    for start in sorted(adjacency):
        while any(not used[k] for k, _ in adjacency[start]):
            polylines.append(walk(start))
    return polylines


def extract_contours(grid: MeasureGrid, level) -> ContourSet:
    """Polylines where the c-index field crosses ``level``.

    Masked cells are treated as outside every level: a cell with any
    masked corner contributes no segments. A level the field never
    crosses yields an empty polyline list, not an error.
    """
    if not isinstance(grid, MeasureGrid):
        raise InvalidParamsError(f"grid must be a MeasureGrid, got {type(grid).__name__}")
    level = _require_finite(level, "level")
    values = grid.c_values
    valid = ~grid.mask
    above = np.zeros(values.shape, dtype=bool)
    above[valid] = values[valid] > level

    cell_ok = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, 1:] & valid[1:, :-1]
    index = (
        above[:-1, :-1].astype(np.uint8)
        | (above[:-1, 1:].astype(np.uint8) << 1)
        | (above[1:, 1:].astype(np.uint8) << 2)
        | (above[1:, :-1].astype(np.uint8) << 3)
    )
    crossing = cell_ok & (index != 0) & (index != 15)

    segments = []
    for i, j in np.argwhere(crossing):
        i, j = int(i), int(j)
        case = int(index[i, j])
        if case in (5, 10):
            centre = 0.25 * (
                float(values[i, j])
                + float(values[i, j + 1])
                + float(values[i + 1, j + 1])
                + float(values[i + 1, j])
            )
            if case == 5:
                pairs = (
                    [(_EDGE_B, _EDGE_R), (_EDGE_T, _EDGE_L)]
                    if centre > level
                    else [(_EDGE_L, _EDGE_B), (_EDGE_R, _EDGE_T)]
                )
            else:
                pairs = (
                    [(_EDGE_L, _EDGE_B), (_EDGE_R, _EDGE_T)]
                    if centre > level
                    else [(_EDGE_B, _EDGE_R), (_EDGE_T, _EDGE_L)]
                )
        else:
            pairs = _SEGMENT_TABLE[case]
        for edge_a, edge_b in pairs:
            point_a = _edge_point(level, i, j, edge_a, grid.p0_axis, grid.rr_axis, values)
            point_b = _edge_point(level, i, j, edge_b, grid.p0_axis, grid.rr_axis, values)
            if point_a != point_b:
                segments.append((point_a, point_b))

    polylines = tuple(tuple(path) for path in _stitch(segments))
    return ContourSet(level=level, polylines=polylines)


# Figure geometry in CSS pixels. Fixed constants plus fixed two-decimal
# coordinate formatting keep the output byte-stable run to run.
_PANEL_WIDTH = 300.0
_PANEL_HEIGHT = 240.0
_MARGIN_LEFT = 66.0
_MARGIN_RIGHT = 66.0
_MARGIN_TOP = 46.0
_MARGIN_BOTTOM = 58.0
_AXIS_TICKS = 5


def _px(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    return f"{x:.4g}"


def _panel_svg(grid: MeasureGrid, spec: GridSpec, offset_x: float) -> list[str]:
    x0 = offset_x + _MARGIN_LEFT
    y0 = _MARGIN_TOP
    p0_span = spec.p0_max - spec.p0_min
    rr_span = spec.rr_max - spec.rr_min

    def to_x(p0_value: float) -> float:
        return x0 + (p0_value - spec.p0_min) / p0_span * _PANEL_WIDTH

    def to_y(rr_value: float) -> float:
        return y0 + _PANEL_HEIGHT - (rr_value - spec.rr_min) / rr_span * _PANEL_HEIGHT

    bottom = y0 + _PANEL_HEIGHT
    right = x0 + _PANEL_WIDTH
    parts = [f'<g class="panel" data-prevalence="{_tick_label(grid.prevalence)}">']
    title = f"risk factor prevalence {_tick_label(100.0 * grid.prevalence)}%"
    parts.append(
        f'<text class="title" x="{_px(x0 + _PANEL_WIDTH / 2)}" y="{_px(y0 - 16)}" '
        f'text-anchor="middle">{title}</text>'
    )
    parts.append(
        f'<rect class="frame" x="{_px(x0)}" y="{_px(y0)}" '
        f'width="{_px(_PANEL_WIDTH)}" height="{_px(_PANEL_HEIGHT)}"/>'
    )

    parts.append('<g class="axis axis-p0">')
    for k in range(_AXIS_TICKS):
        value = spec.p0_min + p0_span * k / (_AXIS_TICKS - 1)
        x = to_x(value)
        parts.append(
            f'<line class="tick" x1="{_px(x)}" y1="{_px(bottom)}" '
            f'x2="{_px(x)}" y2="{_px(bottom + 4)}"/>'
        )
        parts.append(
            f'<text x="{_px(x)}" y="{_px(bottom + 16)}" text-anchor="middle">'
            f"{_tick_label(value)}</text>"
        )
    parts.append(
        f'<text class="axis-label" x="{_px(x0 + _PANEL_WIDTH / 2)}" '
        f'y="{_px(bottom + 34)}" text-anchor="middle">'
        f"incidence among unexposed (p0)</text>"
    )
    parts.append("</g>")

    parts.append('<g class="axis axis-rr">')
    for k in range(_AXIS_TICKS):
        value = spec.rr_min + rr_span * k / (_AXIS_TICKS - 1)
        y = to_y(value)
        parts.append(
            f'<line class="tick" x1="{_px(x0 - 4)}" y1="{_px(y)}" '
            f'x2="{_px(x0)}" y2="{_px(y)}"/>'
        )
        parts.append(
            f'<text x="{_px(x0 - 7)}" y="{_px(y + 3)}" text-anchor="end">'
            f"{_tick_label(value)}</text>"
        )
    parts.append(
        f'<text class="axis-label" transform="translate({_px(x0 - 44)},'
        f'{_px(y0 + _PANEL_HEIGHT / 2)}) rotate(-90)" text-anchor="middle">'
        f"relative risk (RR)</text>"
    )
    parts.append("</g>")

    # The attributable risk is a bijection of rr at fixed prevalence, so the
    # right axis relabels the rr ticks with their PAR values.
    parts.append('<g class="axis axis-par">')
    for k in range(_AXIS_TICKS):
        value = spec.rr_min + rr_span * k / (_AXIS_TICKS - 1)
        y = to_y(value)
        parts.append(
            f'<line class="tick" x1="{_px(right)}" y1="{_px(y)}" '
            f'x2="{_px(right + 4)}" y2="{_px(y)}"/>'
        )
        parts.append(
            f'<text x="{_px(right + 7)}" y="{_px(y + 3)}" text-anchor="start">'
            f"{_tick_label(par(grid.prevalence, value))}</text>"
        )
    parts.append(
        f'<text class="axis-label" transform="translate({_px(right + 48)},'
        f'{_px(y0 + _PANEL_HEIGHT / 2)}) rotate(90)" text-anchor="middle">'
        f"population-attributable risk (PAR)</text>"
    )
    parts.append("</g>")

    parts.append('<g class="contours">')
    for level in spec.contour_levels:
        contour = extract_contours(grid, level)
        if not contour.polylines:
            continue
        parts.append(f'<g class="level" data-level="{_tick_label(level)}">')
        for polyline in contour.polylines:
            points = " L ".join(f"{_px(to_x(x))} {_px(to_y(y))}" for x, y in polyline)
            parts.append(f'<path class="contour" d="M {points}"/>')
        longest = max(contour.polylines, key=len)
        label_x, label_y = longest[len(longest) // 2]
        parts.append(
            f'<text class="contour-label" x="{_px(to_x(label_x) + 2)}" '
            f'y="{_px(to_y(label_y) - 2)}">{_tick_label(level)}</text>'
        )
        parts.append("</g>")
    parts.append("</g>")
    parts.append("</g>")
    return parts


def render_svg(grids, spec: GridSpec) -> str:
    """Self-contained SVG: one panel per prevalence, dual RR/PAR axes.

    Deterministic by construction; rendering the same grids twice gives
    byte-identical documents.
    """
    grids = list(grids)
    if not grids:
        raise RenderError("no grids to render")
    if not isinstance(spec, GridSpec):
        raise InvalidParamsError(f"spec must be a GridSpec, got {type(spec).__name__}")
    if len(grids) != len(spec.prevalences):
        raise InvalidParamsError(
            f"expected one grid per prevalence panel "
            f"({len(spec.prevalences)}), got {len(grids)}"
        )
    for grid, prevalence in zip(grids, spec.prevalences):
        if not isinstance(grid, MeasureGrid):
            raise InvalidParamsError(f"grids must be MeasureGrid, got {type(grid).__name__}")
        if grid.prevalence != prevalence:
            raise InvalidParamsError(
                f"grid order must match spec.prevalences; expected prevalence "
                f"{prevalence:g}, got {grid.prevalence:g}"
            )

    block = _MARGIN_LEFT + _PANEL_WIDTH + _MARGIN_RIGHT
    width = block * len(grids)
    height = _MARGIN_TOP + _PANEL_HEIGHT + _MARGIN_BOTTOM
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_px(width)}" '
        f'height="{_px(height)}" viewBox="0 0 {_px(width)} {_px(height)}">',
        "<style>"
        "text{font-family:sans-serif;font-size:10px;fill:#222222;}"
        ".title{font-size:12px;}"
        ".axis-label{font-size:11px;}"
        ".contour-label{font-size:8px;fill:#1f77b4;}"
        ".frame{fill:none;stroke:#333333;stroke-width:1;}"
        ".tick{stroke:#333333;stroke-width:1;}"
        ".contour{fill:none;stroke:#1f77b4;stroke-width:1;}"
        "</style>",
        f'<rect x="0" y="0" width="{_px(width)}" height="{_px(height)}" fill="#ffffff"/>',
    ]
    for k, grid in enumerate(grids):
        parts.extend(_panel_svg(grid, spec, k * block))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _sig12(x) -> str:
    return format(float(x), ".12g")


def _round12(x) -> float:
    return float(format(float(x), ".12g"))


def grids_to_csv(grids) -> str:
    """CSV export, one row per cell: f, p0, rr, par, c_index, masked.

    Floats carry 12 significant digits; masked cells leave c_index empty.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["f", "p0", "rr", "par", "c_index", "masked"])
    for grid in grids:
        f_text = _sig12(grid.prevalence)
        p0_values = [_sig12(x) for x in grid.p0_axis]
        for i in range(grid.rr_axis.size):
            rr_text = _sig12(grid.rr_axis[i])
            par_text = _sig12(grid.par_axis[i])
            for j, p0_text in enumerate(p0_values):
                masked = bool(grid.mask[i, j])
                writer.writerow(
                    [
                        f_text,
                        p0_text,
                        rr_text,
                        par_text,
                        "" if masked else _sig12(grid.c_values[i, j]),
                        "true" if masked else "false",
                    ]
                )
    return buffer.getvalue()


def grids_to_json(grids, spec: GridSpec) -> str:
    """Nested JSON export: spec echo plus per-panel axis and value arrays.

    Floats are rounded to 12 significant digits; masked cells are null.
    """
    document = {
        "spec": {
            "prevalences": [_round12(v) for v in spec.prevalences],
            "p0_min": _round12(spec.p0_min),
            "p0_max": _round12(spec.p0_max),
            "rr_min": _round12(spec.rr_min),
            "rr_max": _round12(spec.rr_max),
            "resolution": spec.resolution,
            "contour_levels": [_round12(v) for v in spec.contour_levels],
        },
        "grids": [
            {
                "prevalence": _round12(grid.prevalence),
                "p0_axis": [_round12(v) for v in grid.p0_axis],
                "rr_axis": [_round12(v) for v in grid.rr_axis],
                "par_axis": [_round12(v) for v in grid.par_axis],
                "c_values": [
                    [
                        None if grid.mask[i, j] else _round12(grid.c_values[i, j])
                        for j in range(grid.p0_axis.size)
                    ]
                    for i in range(grid.rr_axis.size)
                ],
                "mask": [[bool(x) for x in row] for row in grid.mask],
            }
            for grid in grids
        ],
    }
    return json.dumps(document, indent=2) + "\n"
