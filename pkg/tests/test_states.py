import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qsectors as q
from support import random_product_state

import numpy as np


class TestFactorVector:
    def test_norm_and_dim(self):
        v = q.FactorVector((3.0, 4.0))
        assert v.dim == 2
        assert v.norm == 5.0
        assert v.norm_sq == 25.0

    def test_rejects_empty(self):
        with pytest.raises(q.InvalidAmplitude):
            q.FactorVector(())

    def test_rejects_non_finite(self):
        with pytest.raises(q.InvalidAmplitude):
            q.FactorVector((1.0, float("inf")))
        with pytest.raises(q.InvalidAmplitude):
            q.FactorVector((complex(0, float("nan")),))

    def test_normalized(self):
        v = q.FactorVector((3.0, 4.0)).normalized()
        assert v.norm == pytest.approx(1.0, abs=1e-15)

    def test_normalized_zero_raises(self):
        with pytest.raises(q.ZeroNormFactor):
            q.FactorVector((0.0, 0.0)).normalized()

    def test_distance_to(self):
        a = q.basis_vector(2, 0)
        b = q.basis_vector(2, 1)
        assert a.distance_to(b) == pytest.approx(math.sqrt(2.0))


class TestFactorOverlapFn:
    def test_conjugates_bra(self):
        a = q.FactorVector((1j, 0.0))
        b = q.FactorVector((1.0, 0.0))
        assert q.factor_overlap(a, b) == -1j

    def test_dim_mismatch(self):
        with pytest.raises(q.ShapeMismatch):
            q.factor_overlap(q.basis_vector(2, 0), q.basis_vector(3, 0))


class TestDecaySpec:
    def test_unknown_kind(self):
        with pytest.raises(q.UndeclaredTailClass):
            q.DecaySpec("quadratic")

    def test_geometric_needs_ratio(self):
        with pytest.raises(q.UndeclaredTailClass):
            q.DecaySpec("geometric")
        with pytest.raises(q.UndeclaredTailClass):
            q.DecaySpec("geometric", ratio=1.0)

    def test_p_series_summability(self):
        assert not q.DecaySpec("p-series", p=1.0).summable
        assert q.DecaySpec("p-series", p=1.5).summable
        assert q.DecaySpec("geometric", ratio=0.5).summable
        assert q.DecaySpec("custom-certified", scale=3.0).summable

    def test_geometric_series_bound_matches_sum(self):
        d = q.DecaySpec("geometric", ratio=0.5, scale=2.0)
        exact = sum(d.bound(n) for n in range(10, 200))
        assert d.series_bound(10) == pytest.approx(exact, rel=1e-12)

    def test_p_series_bound_dominates_sum(self):
        d = q.DecaySpec("p-series", p=2.0, scale=1.0)
        partial = sum(d.bound(n) for n in range(5, 200_000))
        bound = d.series_bound(5)
        assert partial <= bound
        # the integral bound should not be grossly loose either
        assert bound <= partial * 1.5

    def test_non_summable_p_series_bound(self):
        assert q.DecaySpec("p-series", p=1.0).series_bound(3) == math.inf


class TestTails:
    def test_constant_tail(self):
        t = q.ConstantTail(q.basis_vector(3, 1))
        assert t.dim == 3
        assert t.factor_at(0) == t.factor_at(10 ** 9)

    def test_parametric_probe_rejects_bad_fn(self):
        with pytest.raises(q.InvalidAmplitude):
            q.ParametricTail(
                2,
                lambda n: (1.0, 0.0),
                q.basis_vector(2, 0),
                q.DecaySpec("geometric", ratio=0.5),
            )

    def test_parametric_dim_mismatch(self):
        with pytest.raises(q.ShapeMismatch):
            q.ParametricTail(
                3,
                lambda n: q.basis_vector(2, 0),
                q.basis_vector(3, 0),
                q.DecaySpec("geometric", ratio=0.5),
            )

    def test_parametric_uses_absolute_site(self):
        seen = []

        def fn(n):
            seen.append(n)
            return q.basis_vector(2, 0)

        state = q.ProductState(
            (q.basis_vector(2, 1),),
            q.ParametricTail(2, fn, q.basis_vector(2, 0), q.DecaySpec("geometric", ratio=0.5)),
        )
        seen.clear()
        state.factor_at(7)
        assert seen == [7]


class TestProductState:
    def test_factor_lookup(self):
        s = q.make_product_state(
            [(0.0, 1.0)], q.ConstantTail(q.basis_vector(2, 0)), label="x"
        )
        assert s.prefix_len == 1
        assert s.factor_at(0) == q.basis_vector(2, 1)
        assert s.factor_at(5) == q.basis_vector(2, 0)
        assert s.dim_at(0) == 2 and s.tail_dim == 2
        assert s.label == "x"

    def test_negative_site(self):
        s = q.ProductState((), q.ConstantTail(q.basis_vector(2, 0)))
        with pytest.raises(q.IndexOutOfRange):
            s.factor_at(-1)


class TestCompositeState:
    def test_requires_terms(self):
        with pytest.raises(q.InvalidAmplitude):
            q.CompositeState(())

    def test_shape_consistency(self):
        a = q.ProductState((), q.ConstantTail(q.basis_vector(2, 0)))
        b = q.ProductState((), q.ConstantTail(q.basis_vector(3, 0)))
        with pytest.raises(q.ShapeMismatch):
            q.CompositeState(((1.0 + 0j, a), (1.0 + 0j, b)))

    def test_scaled(self):
        a = q.ProductState((), q.ConstantTail(q.basis_vector(2, 0)))
        c = q.CompositeState(((2.0 + 0j, a),)).scaled(0.5)
        assert c.terms[0][0] == 1.0 + 0j


class TestShapes:
    def test_prefix_vs_tail_positions(self):
        tail2 = q.ConstantTail(q.basis_vector(2, 0))
        a = q.ProductState((q.basis_vector(2, 1), q.basis_vector(2, 0)), tail2)
        b = q.ProductState((), tail2)
        assert q.shapes_match(a, b)
        c = q.ProductState((q.basis_vector(3, 0),), tail2)
        assert not q.shapes_match(a, c)

    def test_ensure_raises(self):
        a = q.ProductState((), q.ConstantTail(q.basis_vector(2, 0)))
        b = q.ProductState((), q.ConstantTail(q.basis_vector(4, 0)))
        with pytest.raises(q.ShapeMismatch):
            q.ensure_same_shape(a, b)


class TestDistance:
    def test_self_distance_is_exactly_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            s = random_product_state(rng, dim=3)
            assert q.distance(s, s, truncation=6) == 0.0

    def test_orthogonal_units(self):
        tail = q.ConstantTail(q.basis_vector(2, 0))
        a = q.ProductState((q.basis_vector(2, 0),), tail)
        b = q.ProductState((q.basis_vector(2, 1),), tail)
        assert q.distance(a, b, truncation=4) == pytest.approx(2.0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), trunc=st.integers(1, 8))
    def test_symmetric_bitwise(self, seed, trunc):
        rng = np.random.default_rng(seed)
        a = random_product_state(rng, dim=2, unit=False)
        b = random_product_state(rng, dim=2, unit=False)
        assert q.distance(a, b, trunc) == q.distance(b, a, trunc)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10 ** 6))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        a = random_product_state(rng, dim=2, unit=False)
        b = random_product_state(rng, dim=2, unit=False)
        assert q.distance(a, b, 6) >= -1e-9
