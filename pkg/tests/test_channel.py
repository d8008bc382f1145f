import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonant_swipt.channel import (GainPattern, build_channel, channel_entry, dump_channel,
                                    element_gain, load_channel)
from resonant_swipt.geometry import build_planar_array

C = 2.99792458e8
LAM29 = C / 29e9
PI_PATTERN = GainPattern(g_max=math.pi)


def test_element_gain_values():
    p = GainPattern()
    assert element_gain(p, 0.0) == pytest.approx(3.1405, abs=5e-5)
    assert element_gain(p, math.pi / 2) == 0.0
    assert element_gain(p, math.pi / 3) == pytest.approx(1.5703, abs=5e-5)
    assert element_gain(p, 2.5) == 0.0
    with pytest.raises(ValueError):
        element_gain(p, -0.1)


def test_broadside_pair_magnitude():
    h = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 0, -1), LAM29, 2.0, PI_PATTERN)
    assert LAM29 == pytest.approx(0.0103377, abs=1e-7)
    assert abs(h) == pytest.approx(1.2922e-3, rel=1e-4)
    assert abs(h) ** 2 == pytest.approx(1.670e-6, rel=1e-3)
    friis = (LAM29 / (4 * math.pi * 2)) ** 2 * math.pi ** 2
    assert abs(h) ** 2 == pytest.approx(friis, rel=1e-12)


def test_full_wavelength_phase():
    lam = 0.01
    h = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, lam), (0, 0, -1), lam)
    assert math.remainder(np.angle(h), 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_inverse_distance_scaling():
    h1 = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, 1.0), (0, 0, -1), LAM29)
    h2 = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, 2.0), (0, 0, -1), LAM29)
    assert abs(h2) / abs(h1) == pytest.approx(0.5, rel=1e-12)
    h4 = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, 2.0), (0, 0, -1), LAM29, beta=4.0)
    assert abs(h4) / abs(h2) == pytest.approx(0.5, rel=1e-12)


def test_backside_is_dark():
    h = channel_entry((0, 0, 0), (0, 0, 1), (0, 0, -2), (0, 0, 1), LAM29)
    assert h == 0


def test_coincident_rejected():
    with pytest.raises(ValueError, match="coincident"):
        channel_entry((0, 0, 0), (0, 0, 1), (0, 0, 0), (0, 0, -1), LAM29)


def test_one_by_one_reduces_to_entry():
    a = build_planar_array(1, 1, 0.005, (0.1, 0, 0), (0, 0, 1))
    b = build_planar_array(1, 1, 0.005, (0.3, 0.2, 2), (0, 0, -1))
    ch = build_channel(a, b, 29e9)
    assert ch.entries.shape == (1, 1)
    assert ch.entries[0, 0] == channel_entry((0.1, 0, 0), (0, 0, 1), (0.3, 0.2, 2), (0, 0, -1), LAM29)


def test_facing_arrays_mirror_symmetry():
    a = build_planar_array(2, 2, 0.005, (0, 0, 0), (0, 0, 1))
    b = build_planar_array(2, 2, 0.005, (0, 0, 1), (0, 0, -1))
    h = build_channel(a, b, 29e9).entries
    assert np.allclose(h, h.T, rtol=1e-12, atol=0)
    vals = np.sort_complex(np.round(h.ravel(), 18))
    assert len({complex(v) for v in vals}) <= 3  # diagonal, edge and corner pairs


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-1, 1), z=st.floats(0.5, 3), rows=st.integers(1, 4), cols=st.integers(1, 4))
def test_reciprocity(x, z, rows, cols):
    a = build_planar_array(rows, cols, 0.005, (0, 0, 0), (0, 0, 1))
    n = -np.array([x, 0, z]) / np.linalg.norm([x, 0, z])
    b = build_planar_array(cols, rows, 0.005, (x, 0, z), n)
    dl = build_channel(a, b, 29e9, direction="DL")
    ul = build_channel(b, a, 29e9, direction="UL")
    assert np.allclose(ul.entries, dl.entries.T, rtol=1e-12, atol=0)


def test_far_field_limit():
    a = build_planar_array(3, 3, 1e-7, (0, 0, 0), (0, 0, 1))
    b = build_planar_array(2, 2, 1e-7, (0, 0, 2), (0, 0, -1))
    h = build_channel(a, b, 29e9, pattern=PI_PATTERN).entries
    single = (LAM29 / (4 * math.pi * 2)) ** 2 * math.pi ** 2
    assert np.sum(np.abs(h) ** 2) == pytest.approx(9 * 4 * single, rel=1e-9)


def test_entries_read_only():
    a = build_planar_array(1, 1, 0.005, (0, 0, 0), (0, 0, 1))
    b = build_planar_array(1, 1, 0.005, (0, 0, 1), (0, 0, -1))
    ch = build_channel(a, b, 29e9)
    with pytest.raises(ValueError):
        ch.entries[0, 0] = 0


def test_dump_load_round_trip(tmp_path):
    a = build_planar_array(2, 3, 0.005, (0, 0, 0), (0, 0, 1))
    b = build_planar_array(3, 2, 0.005, (0.2, 0, 1), (0, 0, -1))
    ch = build_channel(a, b, 29e9, direction="UL", link_id=2)
    path, side = dump_channel(ch, tmp_path / "h.bin", 29e9)
    assert path.stat().st_size == 6 * 6 * 16
    back = load_channel(path)
    assert np.array_equal(back.entries, ch.entries)
    assert (back.direction, back.link_id, back.wavelength) == ("UL", 2, ch.wavelength)
