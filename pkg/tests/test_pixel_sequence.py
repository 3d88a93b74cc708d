import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcsi.pixel_sequence import (
    Lcg,
    PlanError,
    TransmissionPlan,
    build_permutation,
    lcg_next,
    linear_to_rowcol,
    make_plan,
    packet_slice,
)


def test_lcg_examples():
    assert lcg_next(1) == (1103527590, 1103527590)
    assert lcg_next(0) == (12345, 12345)


def test_lcg_deterministic():
    a, b = Lcg(1), Lcg(1)
    assert [next(a) for _ in range(10_000)] == [next(b) for _ in range(10_000)]


def test_lcg_state_stays_31_bit():
    g = Lcg(2**31 - 1)
    assert all(0 <= next(g) < 2**31 for _ in range(1000))


def test_permutation_small_cases():
    assert build_permutation(1, 1).tolist() == [0]
    # hand-traced: j = 1103527590 % 4, 377401575 % 3, 662824084 % 2
    assert build_permutation(2, 2).tolist() == [1, 3, 0, 2]


def test_permutation_is_permutation_and_stable():
    p = build_permutation(16, 16)
    assert sorted(p.tolist()) == list(range(256))
    assert np.array_equal(p, build_permutation(16, 16))
    assert not p.flags.writeable


def test_permutation_matches_generator_reference():
    # same algorithm written against the Lcg iterator instead of the inlined loop
    total = 16 * 48
    order = list(range(total))
    g = Lcg(1)
    for i in range(total - 1, 0, -1):
        j = next(g) % (i + 1)
        order[i], order[j] = order[j], order[i]
    assert build_permutation(16, 48).tolist() == order


def _plan(rows=16, cols=16, n_color=25, n_grey=75, bits=4):
    return TransmissionPlan(rows, cols, bits, n_color, n_grey)


def test_packet_slice_contiguous():
    plan = _plan()
    perm = build_permutation(16, 16).tolist()
    c, g = packet_slice(plan, 0)
    assert c.tolist() + g.tolist() == perm[:100]
    assert len(c) == 25 and len(g) == 75
    c, g = packet_slice(plan, 1)
    assert c.tolist() + g.tolist() == perm[100:200]


def test_packet_slice_wraps():
    plan = _plan()
    perm = build_permutation(16, 16).tolist()
    c, g = packet_slice(plan, 3)
    expected = [perm[k % 256] for k in range(300, 400)]
    assert c.tolist() + g.tolist() == expected
    assert expected == perm[44:144]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 40), st.integers(1, 120))
def test_one_pass_covers_every_pixel(r16, c16, n_color, n_grey):
    plan = TransmissionPlan(16 * r16, 16 * c16, 8, n_color, n_grey)
    seen = set()
    for pid in range(plan.packets_per_pass):
        c, g = packet_slice(plan, pid)
        assert len(c) == n_color and len(g) == n_grey
        seen.update(c.tolist())
        seen.update(g.tolist())
    assert seen == set(range(plan.total_pixels))


def test_linear_to_rowcol():
    assert linear_to_rowcol(0, 16, 32) == (0, 0)
    assert linear_to_rowcol(16, 16, 32) == (0, 1)
    cells = {linear_to_rowcol(k, 16, 32) for k in range(16 * 32)}
    assert cells == {(r, c) for r in range(16) for c in range(32)}
    with pytest.raises(IndexError):
        linear_to_rowcol(16 * 32, 16, 32)


def test_default_plan_fills_payload():
    plan = make_plan(240, 320)
    assert (plan.n_color, plan.n_grey, plan.bits) == (83, 249, 4)
    assert plan.pdp_len == 256
    assert plan.packets_per_pass == math.ceil(76800 / 332)


def test_plan_for_default_example():
    plan = make_plan(64, 64, n_color=25, n_grey=75, bits=4)
    assert plan.pdp_len == 82


@pytest.mark.parametrize("kwargs", [
    dict(n_color=25, n_grey=74),   # 4 padding bits would decode as a grey pixel
    dict(n_color=300, n_grey=0),
    dict(n_color=0, n_grey=0),
    dict(n_color=100, n_grey=400),
])
def test_plan_rejects(kwargs):
    with pytest.raises(PlanError):
        make_plan(64, 64, bits=4, **kwargs)


@given(st.integers(8, 256), st.integers(1, 8), st.floats(0.0, 1.0))
def test_make_plan_always_valid(pdp, bits, frac):
    try:
        plan = make_plan(16, 16, pdp_size=pdp, bits=bits, color_fraction=frac)
    except PlanError:
        # only possible when not even one pixel fits
        assert 8 * (pdp - 7) < bits * (1 if frac < 1 else 3)
        return
    assert plan.pdp_len <= pdp
    assert plan.padding_bits < plan.bits
