# tests/test_grid.py
import numpy as np
import pytest

from app.core.errors import DomainError, GridFormatError
from app.core.grid import (
    GridFunction3D,
    dump_grid,
    load_grid,
    map_slabs,
    parse_grid,
    save_grid,
    slab_ranges,
    tree_reduce,
)


def small_grid() -> GridFunction3D:
    values = np.arange(2 * 3 * 4, dtype=float).reshape((2, 3, 4)) / 7.0
    return GridFunction3D((-1.0, -2.0, -0.5), (1.0, 2.0, 0.5), values)


def test_dump_and_parse_preserve_values_bit_for_bit():
    u = small_grid()
    v = parse_grid(dump_grid(u))
    assert v.dims == u.dims
    assert v.lo == u.lo and v.hi == u.hi
    assert np.array_equal(v.values, u.values)


def test_x1_runs_fastest_in_the_file():
    text = dump_grid(small_grid())
    lines = text.splitlines()
    assert lines[0] == "grushin-grid v1"
    assert lines[1] == "2 3 4"
    first_row = [float(t) for t in lines[3].split()]
    assert first_row == pytest.approx([0.0, 12 / 7.0])


def test_save_and_load(tmp_path):
    path = tmp_path / "u.grid"
    save_grid(small_grid(), str(path))
    assert np.array_equal(load_grid(str(path)).values, small_grid().values)


def test_bad_header_reports_line_one():
    with pytest.raises(GridFormatError) as excinfo:
        parse_grid("grid v0\n1 1 1\n0 1 0 1 0 1\n0\n")
    assert excinfo.value.line == 1


def test_nan_value_reports_its_line():
    text = "grushin-grid v1\n2 1 1\n0 1 0 1 0 1\n1.0 nan\n"
    with pytest.raises(GridFormatError) as excinfo:
        parse_grid(text)
    assert excinfo.value.line == 4


def test_value_count_mismatch():
    with pytest.raises(GridFormatError):
        parse_grid("grushin-grid v1\n2 2 1\n0 1 0 1 0 1\n1 2 3\n")


def test_degenerate_bbox_is_a_format_error():
    with pytest.raises(GridFormatError) as excinfo:
        parse_grid("grushin-grid v1\n1 1 1\n0 0 0 1 0 1\n1\n")
    assert excinfo.value.line == 3


def test_mask_must_zero_the_values_outside():
    values = np.ones((2, 2, 2))
    mask = np.ones((2, 2, 2), dtype=bool)
    mask[0, 0, 0] = False
    with pytest.raises(DomainError):
        GridFunction3D((0, 0, 0), (1, 1, 1), values, mask)


def test_rescaled_shrinks_the_box_anisotropically():
    u = small_grid().rescaled(2.0, 1.0)
    assert u.lo == pytest.approx((-0.5, -1.0, -0.125))
    assert u.hi == pytest.approx((0.5, 1.0, 0.125))


def test_tree_reduce_is_a_fixed_pairwise_sum():
    assert tree_reduce([]) == 0.0
    assert tree_reduce([1.0, 2.0, 3.0]) == 6.0
    assert tree_reduce([1e16, 1.0, -1e16, 1.0]) == (1e16 + 1.0) + (-1e16 + 1.0)


def test_slab_partition_covers_every_layer_once():
    ranges = slab_ranges(21)
    covered = [k for k0, k1 in ranges for k in range(k0, k1)]
    assert covered == list(range(21))


def test_map_slabs_is_bit_identical_across_thread_counts():
    rng = np.random.default_rng(3)
    data = rng.standard_normal(45)

    def fn(k0, k1):
        return float(np.sum(data[k0:k1] ** 3))

    assert map_slabs(fn, 45, threads=1) == map_slabs(fn, 45, threads=4)
