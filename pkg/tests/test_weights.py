"""Weight families: closed forms, neighbor semantics, support descriptors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wqisa import NeighborContext, WeightSpec, cloud_weights, weight_eval, weight_support

from _oracles import brute_weight_vector


def ctx_of(x):
    return NeighborContext(np.asarray(x, dtype=float))


class TestSpecValidation:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            WeightSpec("parzen")

    @pytest.mark.parametrize("bad", [
        lambda: WeightSpec.knn(0),
        lambda: WeightSpec.characteristic(0.0),
        lambda: WeightSpec.gaussian(-1.0),
        lambda: WeightSpec.exponential(0.0),
    ])
    def test_nonpositive_params(self, bad):
        with pytest.raises(ValueError):
            bad()


class TestClosedForms:
    def test_gaussian_peak(self):
        assert weight_eval(WeightSpec.gaussian(1.0), [0.0], [0.0]) == 1.0

    def test_gaussian_printed_form_uses_plain_norm(self):
        # default numerator is the distance itself, not its square
        w = weight_eval(WeightSpec.gaussian(0.5), [0.0], [2.0])
        assert w == pytest.approx(math.exp(-2.0 / (2 * 0.25)), rel=1e-15)

    def test_gaussian_squared_norm_switch(self):
        w = weight_eval(WeightSpec.gaussian(0.5, squared_norm=True), [0.0], [2.0])
        assert w == pytest.approx(math.exp(-4.0 / (2 * 0.25)), rel=1e-15)

    def test_exponential(self):
        w = weight_eval(WeightSpec.exponential(0.7), [1.0], [3.0])
        assert w == pytest.approx(math.exp(-2.0 / (math.sqrt(2) * 0.7)), rel=1e-15)

    def test_characteristic_closed_ball(self):
        spec = WeightSpec.characteristic(2.0)
        assert weight_eval(spec, [0.0], [2.0]) == 1.0
        assert weight_eval(spec, [0.0], [2.0000001]) == 0.0


class TestKnn:
    def test_three_point_example(self):
        # k = 2 around u = 0 selects x = 0 and x = 1
        ctx = ctx_of([0.0, 1.0, 2.0])
        spec = WeightSpec.knn(2)
        assert weight_eval(spec, [0.0], [0.0], ctx) == 0.5
        assert weight_eval(spec, [0.0], [1.0], ctx) == 0.5
        assert weight_eval(spec, [0.0], [2.0], ctx) == 0.0

    def test_cloud_weights_sum_exactly_one(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(1, 60))
            pts = rng.uniform(-5, 5, size=(n, int(rng.integers(1, 3))))
            ctx = NeighborContext(pts)
            k = int(rng.integers(1, n + 1))
            u = rng.uniform(-5, 5, size=pts.shape[1])
            idx, w = cloud_weights(WeightSpec.knn(k), u, ctx)
            assert len(idx) == k
            assert math.fsum(w) == 1.0

    def test_clamp_warns(self):
        ctx = ctx_of([0.0, 1.0])
        with pytest.warns(UserWarning, match="clamped"):
            idx, w = cloud_weights(WeightSpec.knn(5), [0.0], ctx)
        assert len(idx) == 2
        assert np.all(w == 0.5)

    def test_needs_context(self):
        with pytest.raises(ValueError):
            weight_eval(WeightSpec.knn(1), [0.0], [0.0])


class TestIdw:
    def test_inverse_distance_when_no_coincidence(self):
        ctx = ctx_of([1.0, 3.0])
        assert weight_eval(WeightSpec.idw(), [0.0], [1.0], ctx) == 1.0
        assert weight_eval(WeightSpec.idw(), [0.0], [3.0], ctx) == pytest.approx(1 / 3)

    def test_coincidence_takes_all_mass(self):
        ctx = ctx_of([0.0, 0.0, 2.0])
        spec = WeightSpec.idw()
        assert weight_eval(spec, [0.0], [0.0], ctx) == 0.5
        assert weight_eval(spec, [0.0], [2.0], ctx) == 0.0
        idx, w = cloud_weights(spec, [0.0], ctx)
        assert np.array_equal(idx, [0, 1])
        assert np.all(w == 0.5)


finite = st.floats(-20, 20, allow_nan=False)


@st.composite
def specs(draw):
    family = draw(st.sampled_from(["knn", "characteristic", "gaussian",
                                   "exponential", "idw"]))
    if family == "knn":
        return WeightSpec.knn(draw(st.integers(1, 10)))
    if family == "characteristic":
        return WeightSpec.characteristic(draw(st.floats(0.01, 30)))
    if family == "gaussian":
        return WeightSpec.gaussian(draw(st.floats(0.05, 5)), draw(st.booleans()))
    if family == "exponential":
        return WeightSpec.exponential(draw(st.floats(0.05, 5)))
    return WeightSpec.idw()


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(specs(), st.lists(finite, min_size=1, max_size=40), st.data())
    def test_nonnegative_and_matches_full_scan(self, spec, xs, data):
        pts = np.array(xs).reshape(-1, 1)
        ctx = NeighborContext(pts)
        u = np.array([data.draw(finite)])
        k = spec.k if spec.family == "knn" else None
        if k is not None and k > len(pts):
            return  # clamping covered elsewhere
        idx, w = cloud_weights(spec, u, ctx)
        assert np.all(w >= 0)
        dense = np.zeros(len(pts))
        dense[idx] = w
        params = {"k": spec.k, "r": spec.r, "sigma": spec.sigma,
                  "squared_norm": spec.gaussian_squared_norm}
        ref = brute_weight_vector(spec.family, params, u, pts)
        assert np.allclose(dense, ref, rtol=0, atol=1e-15)


class TestSupport:
    def test_descriptors(self):
        ctx = ctx_of([0.0, 1.0, 2.0])
        ball = weight_support(WeightSpec.characteristic(1.5), [0.0], ctx)
        assert ball.kind == "ball" and ball.radius == 1.5
        pts = weight_support(WeightSpec.knn(2), [0.0], ctx)
        assert pts.kind == "points" and np.array_equal(pts.indices, [0, 1])
        for spec in [WeightSpec.gaussian(1.0), WeightSpec.exponential(1.0),
                     WeightSpec.idw()]:
            assert weight_support(spec, [0.0], ctx).kind == "unbounded"
