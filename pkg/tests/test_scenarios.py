import math
from fractions import Fraction
from functools import reduce

import numpy as np
import pytest

import qsectors as q
from qsectors.oracle import dense_overlap, densify

UP = np.array([1.0, 0.0])
PLUS = np.array([2**-0.5, 2**-0.5])


class TestSpinChainValidation:
    def test_rejects_out_of_range_angles(self):
        with pytest.raises(q.PreconditionViolated):
            q.SpinChainScenario(Fraction(-1, 2))
        with pytest.raises(q.PreconditionViolated):
            q.SpinChainScenario(Fraction(3, 2))

    def test_rejects_oversized_period(self):
        with pytest.raises(q.DimensionBudgetExceeded):
            q.SpinChainScenario(Fraction(1, 17))
        q.SpinChainScenario(Fraction(1, 16))  # at the budget edge

    def test_geometry(self):
        sc = q.SpinChainScenario(Fraction(2, 3))
        assert sc.period == 3
        assert sc.rotated_per_period == 2
        assert sc.block_dim == 8
        whole = q.SpinChainScenario(Fraction(1))
        assert whole.period == 1 and whole.block_dim == 2


class TestSpinChainOverlaps:
    @pytest.mark.parametrize(
        "xi", [Fraction(1), Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(3, 4)]
    )
    def test_sweep_matches_closed_form(self, xi):
        sc = q.SpinChainScenario(xi)
        counts = [sc.period * k for k in range(1, 13)]
        sweep = sc.sweep(counts)
        assert sweep.truncations == tuple(counts)
        for n, v in zip(sweep.truncations, sweep.values):
            want = sc.closed_overlap(n)
            assert v.imag == 0.0
            assert v.real == pytest.approx(want, rel=1e-12)
            assert abs(v) ** 2 == pytest.approx(sc.closed_probability(n), rel=1e-12)

    def test_closed_forms_are_powers_of_two(self):
        sc = q.SpinChainScenario(Fraction(2, 3))
        assert sc.closed_overlap(6) == pytest.approx(2.0**-2)
        assert sc.closed_probability(6) == pytest.approx(2.0**-4)

    def test_flat_chain_never_decays(self):
        sc = q.SpinChainScenario(Fraction(0))
        sweep = sc.sweep([1, 2, 8])
        assert all(v == pytest.approx(1.0) for v in sweep.values)

    def test_misaligned_counts_are_rejected(self):
        sc = q.SpinChainScenario(Fraction(2, 3))
        with pytest.raises(q.NonIntegralFraction):
            sc.closed_overlap(4)
        with pytest.raises(q.NonIntegralFraction):
            sc.sweep([3, 5])

    def test_blocking_matches_per_site_chain(self):
        # two blocks of (+ + up) must equal six independent sites
        sc = q.SpinChainScenario(Fraction(2, 3))
        flat, rotated = sc.states()
        got = q.truncated_overlap(flat, rotated, 2)  # two blocks = six sites
        site_vectors = [PLUS, PLUS, UP] * 2
        dense_rotated = reduce(np.kron, site_vectors)
        dense_flat = reduce(np.kron, [UP] * 6)
        want = np.vdot(dense_flat, dense_rotated)
        assert abs(got - want) < 1e-14
        assert np.max(np.abs(densify(rotated, 2).amplitudes - dense_rotated)) < 1e-14

    def test_state_labels(self):
        flat, rotated = q.SpinChainScenario(Fraction(1, 2)).states()
        assert flat.label == "all-up"
        assert rotated.label == "rotated"


class TestSpinChainSectors:
    def test_rotated_chain_leaves_the_sector(self):
        v = q.SpinChainScenario(Fraction(2, 3)).sector_verdict()
        assert v.kind == "DifferentSector"
        assert v.certificate["limit_overlap_deficit"] == pytest.approx(1.0 - 0.5)

    def test_unrotated_chain_stays(self):
        assert q.SpinChainScenario(Fraction(0)).sector_verdict().kind == "SameSector"

    def test_build_spin_pair_accepts_loose_inputs(self):
        for xi in ("2/3", Fraction(2, 3)):
            a, b = q.build_spin_pair(xi)
            assert q.same_sector(a, b).kind == "DifferentSector"
        a, b = q.build_spin_pair(0)
        assert q.same_sector(a, b).kind == "SameSector"


class TestStageAndCascadeSpecs:
    def test_stage_kind_and_parameter_validation(self):
        with pytest.raises(q.PreconditionViolated):
            q.StageSpec("odd", "uniform", 2.0)
        with pytest.raises(q.PreconditionViolated):
            q.StageSpec("neg", "poisson", -1.0)
        with pytest.raises(q.PreconditionViolated):
            q.StageSpec("frac", "fixed", 2.5)

    def test_cascade_bounds(self):
        stage = (q.StageSpec("s", "fixed", 2),)
        with pytest.raises(q.PreconditionViolated):
            q.CascadeSpec(stages=())
        with pytest.raises(q.PreconditionViolated):
            q.CascadeSpec(stages=stage, fidelity=1.0)
        with pytest.raises(q.InvalidAmplitude):
            q.CascadeSpec(stages=stage, amplitudes=(0.9, 0.9))
        with pytest.raises(q.PreconditionViolated):
            q.CascadeSpec(stages=stage, loss_rate=1.5)
        with pytest.raises(q.PreconditionViolated):
            q.CascadeSpec(stages=stage, dark_rate=-0.5)


class TestRunCascade:
    def test_default_cascade_arithmetic(self):
        r = q.run_cascade(q.default_cascade())
        assert [s.count for s in r.stages] == [10, 1000, 50000]
        assert [s.cumulative_records for s in r.stages] == [10, 1010, 51010]
        assert r.total_records == 51010
        assert r.log10_coherence == pytest.approx(
            math.log10(0.5) + 51010 * math.log10(0.99), rel=1e-15
        )
        assert r.coherence == pytest.approx(0.5 * 0.99**51010)
        assert not r.degenerate

    def test_stage_log_coherence_is_cumulative(self):
        r = q.run_cascade(q.default_cascade())
        logs = [s.log10_coherence for s in r.stages]
        assert logs[0] == pytest.approx(-0.344678049688482, abs=1e-12)
        assert logs[1] == pytest.approx(-4.709483452138571, abs=1e-12)
        assert logs == sorted(logs, reverse=True)

    def test_noiseless_fixed_cascade_ignores_seed(self):
        a = q.run_cascade(q.default_cascade(), seed=1)
        b = q.run_cascade(q.default_cascade(), seed=99)
        assert a.stages == b.stages

    def test_poisson_stages_are_seed_deterministic(self):
        spec = q.CascadeSpec(
            stages=(
                q.StageSpec("burst", "poisson", 8.0),
                q.StageSpec("fanout", "poisson", 30.0),
            )
        )
        a = q.run_cascade(spec, seed=5)
        b = q.run_cascade(spec, seed=5)
        c = q.run_cascade(spec, seed=6)
        assert a.stages == b.stages
        assert a.stages != c.stages
        assert a.stages[1].count > 0

    def test_total_loss_degenerates(self):
        spec = q.CascadeSpec(
            stages=(q.StageSpec("only", "fixed", 4),), loss_rate=1.0
        )
        r = q.run_cascade(spec, seed=3)
        assert r.degenerate
        assert r.total_records == 0
        assert r.model is None
        assert r.coherence == pytest.approx(0.5)
        with pytest.raises(q.PreconditionViolated):
            r.density()

    def test_dark_counts_resurrect_lost_records(self):
        spec = q.CascadeSpec(
            stages=(q.StageSpec("only", "fixed", 4),),
            loss_rate=1.0,
            dark_rate=6.0,
        )
        r = q.run_cascade(spec, seed=3)
        assert r.total_records > 0
        assert not r.degenerate

    def test_loss_thins_the_first_stage_only(self):
        spec = q.CascadeSpec(
            stages=(
                q.StageSpec("first", "fixed", 1000),
                q.StageSpec("second", "fixed", 2),
            ),
            loss_rate=0.5,
        )
        r = q.run_cascade(spec, seed=11)
        assert 0 < r.stages[0].count < 1000
        assert r.stages[1].count == 2 * r.stages[0].count

    def test_density_coherence_matches_score(self):
        spec = q.CascadeSpec(stages=(q.StageSpec("s", "fixed", 3),), fidelity=0.9)
        r = q.run_cascade(spec)
        rho = r.density()
        assert rho.coherence(0, 1) == pytest.approx(r.coherence, rel=1e-12)
        assert rho.truncation == r.total_records

    def test_stage_report_rows(self):
        rows = q.cascade_stage_report(q.run_cascade(q.default_cascade()))
        assert len(rows) == 3
        assert rows[0]["stage"] == "fluorescence"
        assert rows[2]["cumulative_records"] == 51010
        assert all(
            set(r) >= {"stage", "kind", "parameter", "count", "cumulative_records"}
            for r in rows
        )
