import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltprune.segmentation import (
    DegenerateCurveError,
    SmoothingMode,
    apply_smoothing,
    find_split,
    objective_csv,
    round_half_away,
    segment,
    split_objective,
    stage1_mask,
)
from ltprune.similarity import sort_descending
from oracles import brute_force_split, exact_objective, reference_topk

WORKED = [1.0, 0.9, 0.5, 0.2, 0.1, 0.05]
# exact rational evaluation (see oracles.exact_objective), rounded to 5 places
WORKED_F = [0.0, 0.42105, 1.57895, 1.68421, 0.94737]


def test_worked_objective_against_exact_rationals():
    exact = [float(v) for v in exact_objective(WORKED)]
    np.testing.assert_allclose(split_objective(WORKED), exact, rtol=0, atol=1e-9)
    np.testing.assert_allclose(exact, WORKED_F, atol=5e-6)
    assert find_split(WORKED) == 4


def test_two_point_curve():
    assert split_objective([1.0, 0.0]).tolist() == [0.0]
    assert find_split([1.0, 0.0]) == 1


def test_flat_curve_is_degenerate():
    with pytest.raises(DegenerateCurveError):
        split_objective([0.25] * 4)
    r = segment(sort_descending([0.25] * 4))
    assert r.degenerate and r.kept_count == 4


def test_single_token_keeps_it():
    r = segment(sort_descending([1.0]))
    assert r.i_star is None and r.kept_count == 1


@pytest.mark.parametrize("bad", [[0.5], [0.1, 0.2, 0.0]])
def test_objective_preconditions(bad):
    with pytest.raises(ValueError):
        split_objective(bad)


def _random_curve(rng, n):
    kind = rng.integers(3)
    if kind == 0:
        v = rng.random(n)
    elif kind == 1:
        v = rng.exponential(size=n) ** 3
    else:
        v = np.exp(-rng.random() * 20 * np.linspace(0, 1, n)) + rng.random(n) * 1e-3
    return np.sort(v)[::-1]


def test_first_objective_is_zero_and_all_nonnegative():
    rng = np.random.default_rng(1)
    for _ in range(100):
        f = split_objective(_random_curve(rng, int(rng.integers(2, 300))))
        assert f[0] == 0.0
        assert np.all(f >= 0) and np.all(np.isfinite(f))


def test_find_split_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = _random_curve(rng, int(rng.integers(2, 200)))
        assert find_split(d) == brute_force_split(d)


def test_ties_break_to_smallest_cut():
    # f = [0, 2*0.5/1, 1*1/1] = [0, 1, 1]
    assert split_objective([1.0, 0.5, 0.0, 0.0]).tolist() == [0.0, 1.0, 1.0]
    assert find_split([1.0, 0.5, 0.0, 0.0]) == 2


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=3, max_size=80).filter(lambda v: max(v) > min(v) + 1e-6),
    st.floats(0.01, 10),
    st.floats(-5, 5),
)
def test_positive_affine_invariance(values, a, b):
    d = np.sort(np.asarray(values))[::-1]
    f = split_objective(d)
    top = np.sort(f)[-2:]
    # skip near-ties, where rounding in a*d+b may legitimately reorder them
    if len(f) > 1 and top[1] - top[0] < 1e-9 * max(1.0, top[1]):
        return
    assert find_split(a * d + b) == find_split(d)


class TestSmoothing:
    def test_multiply_small(self):
        assert apply_smoothing(4, 0.24, 6, "multiply") == 1

    def test_identity(self):
        assert apply_smoothing(4, 0.24, 6, "identity") == 4

    def test_multiply_large(self):
        assert apply_smoothing(200, 0.24, 576, "multiply") == 48

    def test_expand(self):
        # round(1.24 * 200) = 248; clamp at n
        assert apply_smoothing(200, 0.24, 576, SmoothingMode.EXPAND) == 248
        assert apply_smoothing(5, 0.5, 6, "expand") == 6

    def test_half_rounds_away_from_zero(self):
        assert round_half_away(2.5) == 3
        assert round_half_away(0.5) == 1
        assert round_half_away(-2.5) == -3
        assert apply_smoothing(5, 0.5, 10, "multiply") == 3

    @pytest.mark.parametrize("args", [(4, 0.0, 6, "multiply"), (4, 0.24, 6, "shrink"), (6, 0.24, 6, "identity")])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            apply_smoothing(*args)


def test_stage1_mask_top_k_small():
    c = sort_descending([0.1, 0.6, 0.3])
    assert stage1_mask(c, 2).kept == (1, 2)
    assert stage1_mask(c, 3).kept == (0, 1, 2)
    with pytest.raises(ValueError):
        stage1_mask(c, 0)


def test_stage1_mask_matches_reference_top_k():
    rng = np.random.default_rng(195)
    for n in (576, 1000, 37):
        sims = rng.random(n)
        sims[::7] = sims[0]  # force ties
        c = sort_descending(sims)
        for k in (1, 195 % n or 1, n):
            assert list(stage1_mask(c, k).kept) == reference_topk(sims.tolist(), k)


def test_segment_worked_identity():
    # normalising the curve is a positive scaling, so the split stays at 4
    sims = np.array(WORKED) / sum(WORKED)
    r = segment(sort_descending(sims), 0.24, "identity")
    assert (r.i_star, r.kept_count) == (4, 4)
    assert segment(sort_descending(sims)).kept_count == 1


def test_segment_deterministic():
    rng = np.random.default_rng(9)
    c = sort_descending(rng.random(300))
    a, b = segment(c), segment(c)
    assert a.i_star == b.i_star and a.objective.tobytes() == b.objective.tobytes()


def test_objective_csv():
    text = objective_csv(segment(sort_descending([0.5, 0.3, 0.2]), mode="identity"))
    assert text.splitlines()[0] == "i,f_i"
    assert text.splitlines()[1] == "1,0.0"
    assert len(text.splitlines()) == 3
