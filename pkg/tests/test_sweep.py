import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from binaryrisk import (
    ContourSet,
    GridSpec,
    InvalidParamsError,
    MeasureGrid,
    PopulationParams,
    RenderError,
    derive_measures,
    evaluate_grid,
    extract_contours,
    grids_to_csv,
    grids_to_json,
    par,
    render_svg,
)

from _oracles import bilinear_c

C_INDEX_02 = 0.5408580183861083  # closed form at (f=0.2, p0=0.1, rr=1.5)
PAR_02 = 0.09090909090909091  # 1/11

SVG_NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def default_spec():
    return GridSpec()


@pytest.fixture(scope="module")
def default_grids(default_spec):
    return [evaluate_grid(default_spec, f) for f in default_spec.prevalences]


@pytest.fixture(scope="module")
def wide_spec():
    # reaches into the infeasible corner rr * p0 > 1 so masking is exercised
    return GridSpec(
        prevalences=(0.2,),
        p0_min=0.05,
        p0_max=0.9,
        rr_min=1.0,
        rr_max=3.0,
        resolution=61,
        contour_levels=(0.55, 0.6, 0.7),
    )


@pytest.fixture(scope="module")
def wide_grid(wide_spec):
    return evaluate_grid(wide_spec, 0.2)


class TestGridSpec:
    def test_defaults(self, default_spec):
        assert default_spec.prevalences == (0.5, 0.2, 0.1)
        assert default_spec.p0_min == 0.001
        assert default_spec.p0_max == 0.10
        assert default_spec.rr_min == 1.0
        assert default_spec.rr_max == 3.0
        assert default_spec.resolution == 201
        assert default_spec.contour_levels == tuple(
            round(0.51 + 0.01 * k, 2) for k in range(10)
        )

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"resolution": 1},
            {"resolution": 2.5},
            {"p0_min": 0.2, "p0_max": 0.1},
            {"rr_min": 3.0, "rr_max": 1.0},
            {"rr_min": 0.0},
            {"prevalences": ()},
            {"prevalences": (0.5, 1.5)},
        ],
    )
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InvalidParamsError):
            GridSpec(**kwargs)


class TestEvaluateGrid:
    def test_cell_nearest_reference_scenario(self, default_spec, default_grids):
        grid = default_grids[1]  # prevalence 0.2
        i = int(np.argmin(np.abs(grid.rr_axis - 1.5)))
        j = int(np.argmin(np.abs(grid.p0_axis - 0.10)))
        assert grid.c_values[i, j] == pytest.approx(C_INDEX_02, abs=1e-12)

    def test_null_effect_row_exactly_half(self, default_grids):
        for grid in default_grids:
            assert grid.rr_axis[0] == 1.0
            assert np.all(grid.c_values[0] == 0.5)

    def test_par_axis_entry(self, default_grids):
        grid = default_grids[1]
        i = int(np.argmin(np.abs(grid.rr_axis - 1.5)))
        assert grid.par_axis[i] == pytest.approx(PAR_02, abs=1e-12)

    def test_par_axis_matches_formula(self, default_grids):
        for grid in default_grids:
            for i in range(0, grid.rr_axis.size, 25):
                assert grid.par_axis[i] == par(grid.prevalence, float(grid.rr_axis[i]))

    def test_axes_cover_spec_window(self, default_spec, default_grids):
        grid = default_grids[0]
        assert grid.p0_axis[0] == default_spec.p0_min
        assert grid.p0_axis[-1] == default_spec.p0_max
        assert grid.rr_axis[0] == default_spec.rr_min
        assert grid.rr_axis[-1] == default_spec.rr_max
        assert grid.p0_axis.size == grid.rr_axis.size == default_spec.resolution

    def test_matches_direct_evaluation_on_sample(self, default_grids):
        rng = np.random.Generator(np.random.PCG64(99))
        for grid in default_grids:
            for _ in range(50):
                i = int(rng.integers(0, grid.rr_axis.size))
                j = int(rng.integers(0, grid.p0_axis.size))
                direct = derive_measures(
                    PopulationParams(
                        f=grid.prevalence,
                        p0=float(grid.p0_axis[j]),
                        rr=float(grid.rr_axis[i]),
                    )
                ).c_index
                assert abs(grid.c_values[i, j] - direct) <= 1e-12

    def test_monotone_structure(self, default_grids):
        for grid in default_grids:
            assert np.all(np.diff(grid.c_values, axis=0) > 0.0)
            assert np.all(np.diff(grid.c_values[1:], axis=1) > 0.0)

    def test_infeasible_cells_masked_not_errored(self, wide_grid):
        products = np.outer(wide_grid.rr_axis, wide_grid.p0_axis)
        assert wide_grid.mask.any()
        assert np.array_equal(wide_grid.mask, products > 1.0)
        assert np.all(np.isnan(wide_grid.c_values[wide_grid.mask]))
        unmasked = wide_grid.c_values[~wide_grid.mask]
        assert np.all(unmasked >= 0.5)
        assert np.all(unmasked < 1.0)

    def test_prevalence_must_be_a_panel(self, default_spec):
        with pytest.raises(InvalidParamsError):
            evaluate_grid(default_spec, 0.3)


class TestMeasureGridValidation:
    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InvalidParamsError):
            MeasureGrid(
                prevalence=0.2,
                p0_axis=np.linspace(0.01, 0.1, 5),
                rr_axis=np.linspace(1.0, 2.0, 4),
                c_values=np.zeros((5, 5)),
                par_axis=np.zeros(4),
                mask=np.zeros((4, 5), dtype=bool),
            )

    def test_par_axis_length_checked(self):
        with pytest.raises(InvalidParamsError):
            MeasureGrid(
                prevalence=0.2,
                p0_axis=np.linspace(0.01, 0.1, 5),
                rr_axis=np.linspace(1.0, 2.0, 4),
                c_values=np.zeros((4, 5)),
                par_axis=np.zeros(5),
                mask=np.zeros((4, 5), dtype=bool),
            )


def _vertices(contour_set):
    return [point for polyline in contour_set.polylines for point in polyline]


class TestExtractContours:
    def test_level_below_field_is_empty_or_boundary(self, default_grids):
        contour = extract_contours(default_grids[1], 0.5)
        for x, y in _vertices(contour):
            assert abs(y - 1.0) <= 1e-12  # degenerate set on the rr = 1 edge

    def test_level_crossing_reference_scenario(self, default_grids):
        contour = extract_contours(default_grids[1], 0.54)
        assert contour.polylines
        closest = min(
            math.hypot(x - 0.10, y - 1.5) for x, y in _vertices(contour)
        )
        # c(0.10, 1.5) = 0.5409 > 0.54 > 0.5332 = c(0.10, 1.4): the contour
        # must cross between those points
        assert closest < 0.05

    def test_level_never_crossed_is_empty(self, default_grids):
        contour = extract_contours(default_grids[1], 0.99)
        assert contour.polylines == ()
        assert isinstance(contour, ContourSet)

    def test_vertices_stay_inside_bounding_box(self, default_spec, default_grids):
        for grid in default_grids:
            for level in default_spec.contour_levels:
                for x, y in _vertices(extract_contours(grid, level)):
                    assert default_spec.p0_min <= x <= default_spec.p0_max
                    assert default_spec.rr_min <= y <= default_spec.rr_max

    def test_bilinear_fidelity(self, default_spec, default_grids):
        for grid in default_grids:
            for level in default_spec.contour_levels:
                for x, y in _vertices(extract_contours(grid, level)):
                    assert abs(bilinear_c(grid, x, y) - level) <= 1e-9

    def test_contours_avoid_masked_cells(self, wide_spec, wide_grid):
        for level in wide_spec.contour_levels:
            for x, y in _vertices(extract_contours(wide_grid, level)):
                value = bilinear_c(wide_grid, x, y)
                assert not math.isnan(value)
                assert abs(value - level) <= 1e-9

    def test_deterministic(self, default_grids):
        first = extract_contours(default_grids[0], 0.55)
        second = extract_contours(default_grids[0], 0.55)
        assert first == second

    def test_polylines_are_chained(self, default_grids):
        # one strictly monotone field, one level: a single open polyline
        contour = extract_contours(default_grids[1], 0.54)
        assert len(contour.polylines) == 1
        assert len(contour.polylines[0]) > 10


def _synthetic_grid(values):
    values = np.asarray(values, dtype=float)
    rows, cols = values.shape
    return MeasureGrid(
        prevalence=0.2,
        p0_axis=np.linspace(0.1, 0.2, cols),
        rr_axis=np.linspace(1.0, 2.0, rows),
        c_values=values,
        par_axis=np.zeros(rows),
        mask=np.zeros((rows, cols), dtype=bool),
    )


class TestSaddleCells:
    def test_saddle_with_high_centre_splits_towards_diagonal(self):
        grid = _synthetic_grid([[1.0, 0.0], [0.0, 1.0]])
        contour = extract_contours(grid, 0.4)  # centre mean 0.5 > level
        assert sum(len(p) - 1 for p in contour.polylines) == 2

    def test_saddle_with_low_centre_splits_other_way(self):
        grid = _synthetic_grid([[1.0, 0.0], [0.0, 1.0]])
        contour = extract_contours(grid, 0.6)  # centre mean 0.5 < level
        assert sum(len(p) - 1 for p in contour.polylines) == 2

    def test_opposite_saddle_orientation(self):
        grid = _synthetic_grid([[0.0, 1.0], [1.0, 0.0]])
        for level in (0.4, 0.6):
            contour = extract_contours(grid, level)
            assert sum(len(p) - 1 for p in contour.polylines) == 2
            for x, y in _vertices(contour):
                assert abs(bilinear_c(grid, x, y) - level) <= 1e-12


class TestRenderSvg:
    def test_three_panels_with_dual_axes(self, default_spec, default_grids):
        root = ET.fromstring(render_svg(default_grids, default_spec))
        panels = [e for e in root.iter(f"{SVG_NS}g") if e.get("class") == "panel"]
        par_axes = [
            e for e in root.iter(f"{SVG_NS}g") if e.get("class") == "axis axis-par"
        ]
        rr_axes = [
            e for e in root.iter(f"{SVG_NS}g") if e.get("class") == "axis axis-rr"
        ]
        assert len(panels) == 3
        assert len(par_axes) == 3
        assert len(rr_axes) == 3

    def test_contour_paths_present_for_defaults(self, default_spec, default_grids):
        root = ET.fromstring(render_svg(default_grids, default_spec))
        paths = [e for e in root.iter(f"{SVG_NS}path") if e.get("class") == "contour"]
        assert paths

    def test_no_paths_when_level_never_crossed(self):
        spec = GridSpec(prevalences=(0.2,), resolution=21, contour_levels=(0.99,))
        grids = [evaluate_grid(spec, 0.2)]
        svg = render_svg(grids, spec)
        root = ET.fromstring(svg)
        paths = [e for e in root.iter(f"{SVG_NS}path") if e.get("class") == "contour"]
        assert paths == []
        panels = [e for e in root.iter(f"{SVG_NS}g") if e.get("class") == "panel"]
        assert len(panels) == 1

    def test_byte_identical_across_runs(self, default_spec, default_grids):
        assert render_svg(default_grids, default_spec) == render_svg(
            default_grids, default_spec
        )

    def test_self_contained(self, default_spec, default_grids):
        svg = render_svg(default_grids, default_spec)
        assert "http://www.w3.org/2000/svg" in svg
        assert "<script" not in svg
        assert "@import" not in svg
        assert "url(" not in svg

    def test_empty_grid_list_rejected(self, default_spec):
        with pytest.raises(RenderError):
            render_svg([], default_spec)

    def test_panel_count_mismatch_rejected(self, default_spec, default_grids):
        with pytest.raises(InvalidParamsError):
            render_svg(default_grids[:2], default_spec)


class TestExports:
    def test_csv_shape_and_header(self, default_grids):
        text = grids_to_csv(default_grids)
        lines = text.splitlines()
        assert lines[0] == "f,p0,rr,par,c_index,masked"
        assert len(lines) == 1 + 3 * 201 * 201

    def test_csv_field_values(self, default_grids):
        line = grids_to_csv([default_grids[1]]).splitlines()[1]
        f, p0, rr, par_text, c, masked = line.split(",")
        assert f == "0.2"
        assert p0 == "0.001"
        assert rr == "1"
        assert par_text == "0"
        assert c == "0.5"
        assert masked == "false"

    def test_csv_12_significant_digits(self, default_grids):
        grid = default_grids[1]
        i = int(np.argmin(np.abs(grid.rr_axis - 1.5)))
        j = int(np.argmin(np.abs(grid.p0_axis - 0.10)))
        text = grids_to_csv([grid])
        row = text.splitlines()[1 + i * grid.p0_axis.size + j]
        assert row.split(",")[4] == "0.540858018386"

    def test_csv_masked_rows(self, wide_grid):
        lines = grids_to_csv([wide_grid]).splitlines()[1:]
        masked_lines = [line for line in lines if line.endswith(",true")]
        assert len(masked_lines) == int(wide_grid.mask.sum())
        for line in masked_lines[:5]:
            assert line.split(",")[4] == ""

    def test_json_round_trips(self, default_spec, default_grids):
        document = json.loads(grids_to_json(default_grids, default_spec))
        assert document["spec"]["resolution"] == 201
        assert document["spec"]["prevalences"] == [0.5, 0.2, 0.1]
        assert len(document["grids"]) == 3
        grid_doc = document["grids"][1]
        assert grid_doc["prevalence"] == 0.2
        assert len(grid_doc["c_values"]) == 201
        assert len(grid_doc["c_values"][0]) == 201
        assert grid_doc["c_values"][0][0] == 0.5

    def test_json_masks_are_null(self, wide_spec, wide_grid):
        document = json.loads(grids_to_json([wide_grid], wide_spec))
        grid_doc = document["grids"][0]
        i, j = np.argwhere(wide_grid.mask)[0]
        assert grid_doc["mask"][int(i)][int(j)] is True
        assert grid_doc["c_values"][int(i)][int(j)] is None
