import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from porelayer.geometry import (CellGeometry, ChannelGeometry, GeometryError, Rect,
                                StripGeometry, build_perforated_domain, shift_interface)

SQUARE = CellGeometry(((0.25, 0.25, 0.75, 0.75),))


def test_rect_rejects_degenerate():
    with pytest.raises(GeometryError):
        Rect(0.5, 0.2, 0.5, 0.4)


def test_margin_is_enforced():
    with pytest.raises(GeometryError):
        CellGeometry(((0.05, 0.3, 0.5, 0.7),))
    CellGeometry(((0.05, 0.3, 0.5, 0.7),), margin=0.05)


def test_overlapping_inclusions_rejected():
    with pytest.raises(GeometryError):
        CellGeometry(((0.2, 0.2, 0.6, 0.6), (0.5, 0.5, 0.8, 0.8)))


def test_touching_inclusions_allowed():
    c = CellGeometry(((0.2, 0.2, 0.5, 0.6), (0.5, 0.2, 0.8, 0.4)))
    assert c.fluid_connected()


def test_enclosed_fluid_rejected():
    # a ring of four bars traps fluid in the middle
    ring = ((0.2, 0.2, 0.8, 0.3), (0.2, 0.7, 0.8, 0.8), (0.2, 0.3, 0.3, 0.7), (0.7, 0.3, 0.8, 0.7))
    with pytest.raises(GeometryError, match="connected"):
        CellGeometry(ring)


@pytest.mark.parametrize("eps,count", [(0.5, 4), (0.25, 16)])
def test_copy_count(eps, count):
    dom = build_perforated_domain(ChannelGeometry(1.0, 1.0, 1.0, eps, SQUARE))
    assert len(dom.solids) == count
    assert all(r.diameter < eps for r in dom.solids)


def test_first_copy_affine_map():
    dom = build_perforated_domain(ChannelGeometry(1.0, 1.0, 1.0, 0.25, SQUARE))
    assert np.allclose(dom.solids[0].as_list(), [0.0625, -0.1875, 0.1875, -0.0625])


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0.5, 0.25, 0.125, 0.1, 0.0625]),
       st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_copies_stay_in_porous_part(eps, nl, nh, nH):
    ch = ChannelGeometry(nl * 1.0, nh * 1.0, nH * 1.0, eps, SQUARE)
    dom = build_perforated_domain(ch)
    assert len(dom.solids) == ch.n_cols * ch.n_rows
    for r in dom.solids:
        assert r.x0 > 0 and r.x1 < ch.L and r.y0 > -ch.H and r.y1 < 0
    assert dom == build_perforated_domain(ch)


@pytest.mark.parametrize("L,h,H,eps", [(1.0, 1.0, 1.0, 0.3), (1.0, 0.9, 1.0, 0.25),
                                       (1.0, 1.0, 0.1, 0.25), (1.0, 1.0, 1.0, 0.0)])
def test_channel_rejects_non_integer_ratios(L, h, H, eps):
    with pytest.raises(GeometryError):
        ChannelGeometry(L, h, H, eps, SQUARE)


def test_channel_accepts_decimal_eps():
    ch = ChannelGeometry(1.0, 1.0, 1.0, 0.1, SQUARE)
    assert (ch.n_cols, ch.n_rows, ch.n_free_rows) == (10, 10, 10)


def test_shift_identity_and_valid_line():
    cell = CellGeometry(((0.3, 0.3, 0.7, 0.7),))
    s = StripGeometry(cell)
    assert shift_interface(s, 0.0) == s
    moved = shift_interface(s, -0.25)
    assert moved.interface_offset == -0.25 and moved.cell == cell


def test_shift_through_solid_rejected():
    s = StripGeometry(CellGeometry(((0.3, 0.3, 0.7, 0.7),)))
    with pytest.raises(GeometryError, match="solid"):
        shift_interface(s, -0.5)


def test_shift_bounds():
    s = StripGeometry(SQUARE, bottom=4)
    with pytest.raises(GeometryError):
        shift_interface(s, 0.1)
    with pytest.raises(GeometryError):
        shift_interface(s, -3.0)


def test_strip_bottom_must_be_integer():
    with pytest.raises(GeometryError):
        StripGeometry(SQUARE, bottom=2.5)


def test_reflection_and_symmetry():
    assert SQUARE.is_symmetric_x()
    c = CellGeometry(((0.15, 0.2, 0.4, 0.7),))
    assert not c.is_symmetric_x()
    assert np.allclose(c.reflected_x().inclusions[0].as_list(), [0.6, 0.2, 0.85, 0.7])
