import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qsectors as q

from support import random_factor

E0 = q.FactorVector((1.0, 0.0))
E1 = q.FactorVector((0.0, 1.0))


def unit_state(prefix=(), tail_vec=E0, label=""):
    return q.make_product_state(prefix, q.ConstantTail(tail_vec), label=label)


def rotated(theta):
    return q.FactorVector((math.cos(theta), math.sin(theta)))


def geometric_state(limit, ratio=0.5, amp=0.2, direction=E1):
    """Unit-factor state whose tail slides toward ``limit`` geometrically."""

    def fn(n):
        raw = tuple(
            l + amp * ratio ** n * d
            for l, d in zip(limit.amplitudes, direction.amplitudes)
        )
        return q.FactorVector(raw).normalized()

    # normalizing moves a near-unit vector by at most twice the raw shift
    decay = q.DecaySpec(kind="geometric", ratio=ratio, scale=4.0 * amp)
    return q.ProductState(
        prefix=(), tail=q.ParametricTail(dim=2, factor_fn=fn, limit=limit, decay=decay)
    )


class TestClassifySequence:
    def test_constant_above_one_diverges(self):
        s = unit_state(tail_vec=q.FactorVector((1.2, 0.0)))
        assert q.classify_sequence(s).kind == "NotConvergentSequence"

    def test_constant_below_one_converges(self):
        s = unit_state(tail_vec=q.FactorVector((0.9, 0.0)))
        c = q.classify_sequence(s)
        assert c.kind == "ConvergentSequence"
        assert "zero_factor_at" not in c.evidence

    def test_zero_prefix_factor(self):
        s = unit_state(prefix=(q.FactorVector((0.0, 0.0)),))
        c = q.classify_sequence(s)
        assert c.kind == "ConvergentSequence"
        assert c.evidence["zero_factor_at"] == 0

    def test_zero_constant_tail(self):
        s = unit_state(prefix=(E0,), tail_vec=q.FactorVector((0.0, 0.0)))
        c = q.classify_sequence(s)
        assert c.kind == "ConvergentSequence"
        assert c.evidence["zero_factor_at"] == 1

    def test_zero_in_parametric_tail(self):
        zero = q.FactorVector((0.0, 0.0))

        def fn(n):
            return zero if n == 2 else E0

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=E0,
            decay=q.DecaySpec(kind="geometric", ratio=0.5, scale=8.0),
        )
        c = q.classify_sequence(q.ProductState(prefix=(), tail=tail))
        assert c.kind == "ConvergentSequence"
        assert c.evidence["zero_factor_at"] == 2

    def test_unit_constant_is_non_trivial(self):
        c = q.classify_sequence(unit_state(prefix=(E1, rotated(0.4))))
        assert c.kind == "NonTrivialConvergentSequence"
        assert c.evidence["proven"] is True
        assert c.evidence["norm_series_bound"] < 1e-9

    def test_geometric_bound_covers_reality(self):
        s = geometric_state(E0)
        c = q.classify_sequence(s)
        assert c.kind == "NonTrivialConvergentSequence"
        actual = sum(abs(s.factor_at(k).norm - 1.0) for k in range(3000))
        assert c.evidence["norm_series_bound"] >= actual

    def test_probe_accepts_fast_decay_under_weak_declaration(self):
        def fn(n):
            return q.FactorVector((1.0 + (n + 1.0) ** -2, 0.0))

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=E0,
            decay=q.DecaySpec(kind="p-series", p=0.5, scale=2.0),
        )
        c = q.classify_sequence(q.ProductState(prefix=(), tail=tail))
        assert c.kind == "NonTrivialConvergentSequence"
        assert c.evidence["proven"] is False
        assert c.evidence["method"] == "numeric-probe"

    def test_probe_rejects_slow_decay(self):
        def fn(n):
            return q.FactorVector((1.0 - 0.1 / math.log(n + 3.0), 0.0))

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=E0,
            decay=q.DecaySpec(kind="p-series", p=0.3, scale=1.0),
        )
        c = q.classify_sequence(q.ProductState(prefix=(), tail=tail))
        assert c.kind == "ConvergentSequence"
        assert c.evidence["proven"] is False


class TestSameSectorPreconditions:
    def test_rejects_shrinking_state(self):
        bad = unit_state(tail_vec=q.FactorVector((0.9, 0.0)))
        with pytest.raises(q.PreconditionViolated):
            q.same_sector(bad, unit_state())

    def test_rejects_growing_partner(self):
        bad = unit_state(tail_vec=q.FactorVector((1.1, 0.0)))
        with pytest.raises(q.PreconditionViolated):
            q.same_sector(unit_state(), bad)

    def test_rejects_shape_mismatch(self):
        three = q.make_product_state((), q.ConstantTail(q.basis_vector(3, 0)))
        with pytest.raises(q.ShapeMismatch):
            q.same_sector(unit_state(), three)


class TestSameSectorVerdicts:
    def test_orthogonal_prefix_site_does_not_split(self):
        a = unit_state(prefix=(E0,), label="a")
        b = unit_state(prefix=(E1,), label="b")
        v = q.same_sector(a, b)
        assert v.kind == "SameSector"
        assert v.certificate["differing_prefix_indices"] == (0,)
        assert v.certificate["prefix_deficit_sum"] == pytest.approx(1.0)
        assert v.certificate["limit_overlap_deficit"] == 0.0

    def test_constant_tail_certificate(self):
        v = q.same_sector(unit_state(), unit_state(prefix=(rotated(0.3),)))
        assert v.kind == "SameSector"
        assert v.certificate["method"] == "constant-tails"
        deficit = 1.0 - math.cos(0.3)
        assert v.certificate["deficit_series_bound"] >= deficit

    def test_parametric_certificate_dominates_partial_sums(self):
        a = geometric_state(E0, ratio=0.5, amp=0.2)
        b = geometric_state(E0, ratio=0.7, amp=0.1, direction=rotated(1.0))
        v = q.same_sector(a, b)
        assert v.kind == "SameSector"
        assert v.certificate["method"] == "declared-decay"
        partial = sum(
            abs(q.factor_overlap(a.factor_at(k), b.factor_at(k)) - 1.0)
            for k in range(2000)
        )
        assert v.certificate["deficit_series_bound"] >= partial

    def test_misaligned_tails_split(self):
        v = q.same_sector(unit_state(), unit_state(tail_vec=rotated(0.2)))
        assert v.kind == "DifferentSector"
        deficit = v.certificate["limit_overlap_deficit"]
        assert deficit == pytest.approx(1.0 - math.cos(0.2))
        assert v.certificate["per_term_lower_bound"] == deficit / 2.0

    def test_witness_holds_term_by_term(self):
        a = geometric_state(E0, ratio=0.5, amp=0.1)
        b = geometric_state(rotated(0.5), ratio=0.5, amp=0.1)
        v = q.same_sector(a, b)
        assert v.kind == "DifferentSector"
        site = v.certificate["from_site"]
        bound = v.certificate["per_term_lower_bound"]
        for k in range(site, site + 100):
            deficit = abs(q.factor_overlap(a.factor_at(k), b.factor_at(k)) - 1.0)
            assert deficit >= bound

    def test_gray_zone_is_inconclusive(self):
        # deficit ~ 1e-10 sits between the snap and decisive thresholds
        delta = math.sqrt(2e-10)
        near = q.FactorVector((1.0, delta)).normalized()
        v = q.same_sector(unit_state(), unit_state(tail_vec=near))
        assert v.kind == "Inconclusive"
        assert "gray zone" in v.certificate["reason"]

    def test_unsummable_declaration_is_inconclusive(self):
        def fn(n):
            return q.FactorVector((1.0, 1.0 / (n + 2.0))).normalized()

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=E0,
            decay=q.DecaySpec(kind="p-series", p=1.0, scale=1.0),
        )
        s = q.ProductState(prefix=(), tail=tail)
        v = q.same_sector(s, unit_state())
        assert v.kind == "Inconclusive"
        assert "summable" in v.certificate["reason"]


class TestEquivalenceAxioms:
    def pool(self):
        return [
            unit_state(label="bare"),
            unit_state(prefix=(E1,), label="flipped"),
            unit_state(prefix=(rotated(0.7), E0), label="tilted"),
            unit_state(tail_vec=rotated(0.3), label="other-bare"),
            unit_state(prefix=(E0,), tail_vec=rotated(0.3), label="other-flipped"),
        ]

    def test_reflexive(self):
        for s in self.pool():
            assert q.same_sector(s, s).kind == "SameSector"

    def test_symmetric(self):
        pool = self.pool()
        for a in pool:
            for b in pool:
                assert q.same_sector(a, b).kind == q.same_sector(b, a).kind

    def test_transitive_and_consistent(self):
        pool = self.pool()
        kinds = {
            (i, j): q.same_sector(a, b).kind
            for i, a in enumerate(pool)
            for j, b in enumerate(pool)
        }
        n = len(pool)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if kinds[i, j] == "SameSector" and kinds[j, k] == "SameSector":
                        assert kinds[i, k] == "SameSector"
                    if kinds[i, j] == "SameSector" and kinds[j, k] == "DifferentSector":
                        assert kinds[i, k] == "DifferentSector"

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(0, 3))
    def test_random_finite_prefixes_stay_together(self, seed, la, lb):
        rng = np.random.default_rng(seed)
        a = unit_state(prefix=tuple(random_factor(rng, 2) for _ in range(la)))
        b = unit_state(prefix=tuple(random_factor(rng, 2) for _ in range(lb)))
        assert q.same_sector(a, b).kind == "SameSector"


class TestNormedRepresentative:
    def test_constant_tail(self):
        s = q.make_product_state(
            (q.FactorVector((2.0, 0.0)),),
            q.ConstantTail(q.FactorVector((0.0, 0.5j))),
        )
        r = q.normed_representative(s)
        assert r.factor_at(0).norm == pytest.approx(1.0)
        assert r.factor_at(7).norm == pytest.approx(1.0)
        # phase is kept, only the modulus is rescaled
        assert r.factor_at(7).amplitudes[1] == pytest.approx(1j)
        assert q.classify_sequence(r).kind == "NonTrivialConvergentSequence"

    def test_parametric_tail(self):
        def fn(n):
            return q.FactorVector((1.0 + 0.3 * 0.5 ** n, 0.0))

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=E0,
            decay=q.DecaySpec(kind="geometric", ratio=0.5, scale=0.3),
        )
        r = q.normed_representative(q.ProductState(prefix=(), tail=tail))
        for k in range(10):
            assert r.factor_at(k).norm == pytest.approx(1.0)
        assert r.tail.decay.scale == pytest.approx(0.6)

    def test_zero_limit_rejected(self):
        def fn(n):
            return q.FactorVector((0.5 ** n, 0.0))

        tail = q.ParametricTail(
            dim=2,
            factor_fn=fn,
            limit=q.FactorVector((0.0, 0.0)),
            decay=q.DecaySpec(kind="geometric", ratio=0.5, scale=1.0),
        )
        with pytest.raises(q.ZeroNormFactor):
            q.normed_representative(q.ProductState(prefix=(), tail=tail))


class TestApplyFiniteChange:
    def test_empty_changes_is_identity(self):
        s = unit_state(prefix=(E1,))
        assert q.apply_finite_change(s, {}) is s

    def test_negative_site(self):
        with pytest.raises(q.PreconditionViolated):
            q.apply_finite_change(unit_state(), {-1: E0})

    def test_dim_mismatch(self):
        with pytest.raises(q.ShapeMismatch):
            q.apply_finite_change(unit_state(), {0: q.basis_vector(3, 0)})

    def test_materializes_through_changed_site(self):
        s = unit_state(prefix=(E1,))
        t = q.apply_finite_change(s, {4: rotated(0.9)})
        assert t.prefix_len == 5
        assert t.factor_at(0) is s.factor_at(0)
        assert t.factor_at(2).amplitudes == E0.amplitudes
        assert t.factor_at(4).amplitudes == rotated(0.9).amplitudes
        assert t.factor_at(11).amplitudes == E0.amplitudes

    def test_accepts_raw_sequences(self):
        t = q.apply_finite_change(unit_state(), {0: (0.0, 1.0)})
        assert t.factor_at(0).amplitudes == (0.0, 1.0)

    def test_change_never_leaves_the_sector(self):
        s = geometric_state(E0)
        t = q.apply_finite_change(s, {0: E1, 3: rotated(1.2), 9: E1})
        assert q.same_sector(s, t).kind == "SameSector"
