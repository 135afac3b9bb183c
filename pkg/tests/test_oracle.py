import numpy as np
import pytest

import qsectors as q
from qsectors.oracle import (
    DENSE_AMPLITUDE_BUDGET,
    DENSE_OPERATOR_BUDGET,
    DenseState,
    dense_density,
    dense_expectation,
    dense_overlap,
    densify,
    densify_operator,
)

E0 = q.FactorVector((1.0, 0.0))
E1 = q.FactorVector((0.0, 1.0))


def constant_state(prefix=(), tail_vec=E0):
    return q.make_product_state(prefix, q.ConstantTail(tail_vec))


class TestDenseState:
    def test_size_must_match_dims(self):
        with pytest.raises(q.ShapeMismatch):
            DenseState(np.ones(3), (2, 2))

    def test_zero_sites_is_a_scalar(self):
        s = DenseState(np.ones(1), ())
        assert s.norm == 1.0

    def test_amplitudes_read_only(self):
        s = DenseState(np.ones(4), (2, 2))
        with pytest.raises(ValueError):
            s.amplitudes[0] = 7.0


class TestDensify:
    def test_site_zero_is_most_significant(self):
        s = constant_state(prefix=(E1, E0))
        dense = densify(s, 2)
        assert dense.dims == (2, 2)
        # index 2 = binary 10: site 0 in state |1>, site 1 in state |0>
        assert dense.amplitudes[2] == 1.0 + 0j
        assert np.count_nonzero(dense.amplitudes) == 1

    def test_mixed_dims(self):
        s = q.make_product_state(
            (q.basis_vector(3, 2),), q.ConstantTail(E0)
        )
        dense = densify(s, 2)
        assert dense.dims == (3, 2)
        assert dense.amplitudes[4] == 1.0 + 0j  # 2 * dim(2) + 0

    def test_composite_sums_terms(self):
        a = constant_state(prefix=(E0,))
        b = constant_state(prefix=(E1,))
        c = q.CompositeState(((0.5, a), (0.5j, b)))
        dense = densify(c, 1)
        assert dense.amplitudes[0] == 0.5
        assert dense.amplitudes[1] == 0.5j

    def test_truncation_zero(self):
        dense = densify(constant_state(), 0)
        assert dense.dims == ()
        assert dense.amplitudes[0] == 1.0 + 0j

    def test_amplitude_budget(self):
        n_over = 21  # 2^21 amplitudes crosses the budget
        assert 2**n_over > DENSE_AMPLITUDE_BUDGET
        with pytest.raises(q.DimensionBudgetExceeded):
            densify(constant_state(), n_over)
        densify(constant_state(), 20)  # at the edge, still fine

    def test_negative_truncation(self):
        with pytest.raises(q.PreconditionViolated):
            densify(constant_state(), -1)


class TestDensifyOperator:
    def test_identity_fill(self):
        op = q.FactoredOperator(
            (
                q.OperatorTerm(
                    2.0,
                    (q.FactorOperator(((0.0, 1.0), (1.0, 0.0))),),
                    q.IdentityTail(2),
                ),
            )
        )
        m = densify_operator(op, 2)
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.max(np.abs(m - 2.0 * np.kron(x, np.eye(2)))) < 1e-15

    def test_term_sum(self):
        z = q.FactorOperator(((1.0, 0.0), (0.0, -1.0)))
        op = q.FactoredOperator(
            (
                q.OperatorTerm(1.0, (z,), q.IdentityTail(2)),
                q.OperatorTerm(-0.5, (), q.IdentityTail(2)),
            )
        )
        m = densify_operator(op, 1)
        assert np.max(np.abs(m - np.array([[0.5, 0.0], [0.0, -1.5]]))) < 1e-15

    def test_operator_budget(self):
        op = q.FactoredOperator(
            (q.OperatorTerm(1.0, (), q.IdentityTail(2)),)
        )
        with pytest.raises(q.DimensionBudgetExceeded):
            densify_operator(op, 11)  # 2^11 rows crosses the budget
        m = densify_operator(op, 10)
        assert m.shape == (DENSE_OPERATOR_BUDGET, DENSE_OPERATOR_BUDGET)


class TestDenseAlgebra:
    def test_overlap_conjugates_the_bra(self):
        a = DenseState(np.array([1.0j, 0.0]), (2,))
        b = DenseState(np.array([1.0, 0.0]), (2,))
        assert dense_overlap(a, b) == -1.0j

    def test_overlap_dims_must_match(self):
        with pytest.raises(q.ShapeMismatch):
            dense_overlap(DenseState(np.ones(2), (2,)), DenseState(np.ones(3), (3,)))

    def test_expectation(self):
        s = DenseState(np.array([0.6, 0.8]), (2,))
        z = np.diag([1.0, -1.0])
        assert dense_expectation(z, s) == pytest.approx(0.36 - 0.64)

    def test_density_traces_out_the_rest(self):
        # (|0>|u> + |1>|v>)/sqrt(2) with <u|v> = 0.5
        u = np.array([1.0, 0.0])
        v = np.array([0.5, np.sqrt(0.75)])
        amp = (np.kron([1, 0], u) + np.kron([0, 1], v)) / np.sqrt(2.0)
        rho = dense_density(DenseState(amp, (2, 2)), 2)
        assert rho.shape == (2, 2)
        assert rho[0, 0] == pytest.approx(0.5)
        assert rho[1, 1] == pytest.approx(0.5)
        assert rho[0, 1] == pytest.approx(0.25)
        assert np.trace(rho).real == pytest.approx(1.0)

    def test_density_requires_divisible_dim(self):
        with pytest.raises(q.ShapeMismatch):
            dense_density(DenseState(np.ones(6) / np.sqrt(6.0), (6,)), 4)
