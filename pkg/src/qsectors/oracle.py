"""Dense cross-checks for small truncations.

Everything here is deliberately brute force: materialize the first N
factors as one Kronecker-product vector or matrix and use plain linear
algebra.  The point is to have an independent computation path whose only
cleverness is a budget guard, against which the streaming code can be
compared on every shape the budget admits.

Site 0 is the most significant digit of the composite index, matching the
fold order of repeated Kronecker products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Union

import numpy as np

from .errors import DimensionBudgetExceeded, PreconditionViolated, ShapeMismatch
from .operators import FactoredOperator
from .states import CompositeState, ProductState

__all__ = [
    "DENSE_AMPLITUDE_BUDGET",
    "DENSE_OPERATOR_BUDGET",
    "DenseState",
    "densify",
    "densify_operator",
    "dense_overlap",
    "dense_expectation",
    "dense_density",
]

DENSE_AMPLITUDE_BUDGET = 2 ** 20
DENSE_OPERATOR_BUDGET = 2 ** 10


@dataclass(frozen=True, eq=False)
class DenseState:
    """Explicit amplitudes of the first len(dims) factors."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        v = np.array(self.amplitudes, dtype=complex)
        expected = int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1
        if v.ndim != 1 or v.size != expected:
            raise ShapeMismatch(
                f"amplitude count {v.size} does not match dims {self.dims}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _truncation_dims(state: ProductState, truncation: int) -> tuple[int, ...]:
    if truncation < 0:
        raise PreconditionViolated("truncation must be >= 0")
    dims = tuple(state.dim_at(site) for site in range(truncation))
    total = 1
    for d in dims:
        total *= d
        if total > DENSE_AMPLITUDE_BUDGET:
            raise DimensionBudgetExceeded(
                f"dense state would need more than {DENSE_AMPLITUDE_BUDGET} "
                "amplitudes"
            )
    return dims


def _densify_product(state: ProductState, truncation: int) -> np.ndarray:
    factors = [
        np.asarray(state.factor_at(site).amplitudes, dtype=complex)
        for site in range(truncation)
    ]
    if not factors:
        return np.ones(1, dtype=complex)
    return reduce(np.kron, factors)


def densify(
    state: Union[ProductState, CompositeState], truncation: int
) -> DenseState:
    """Materialize the first ``truncation`` factors as one dense vector."""
    if isinstance(state, ProductState):
        dims = _truncation_dims(state, truncation)
        return DenseState(_densify_product(state, truncation), dims)
    first = state.terms[0][1]
    dims = _truncation_dims(first, truncation)
    total = np.zeros(int(np.prod(dims, dtype=np.int64)) if dims else 1, dtype=complex)
    for coeff, term in state.terms:
        total = total + coeff * _densify_product(term, truncation)
    return DenseState(total, dims)


def densify_operator(op: FactoredOperator, truncation: int) -> np.ndarray:
    """Materialize the first ``truncation`` factors of a factored operator."""
    if truncation < 0:
        raise PreconditionViolated("truncation must be >= 0")
    total_dim = 1
    for site in range(truncation):
        total_dim *= op.dim_at(site)
        if total_dim > DENSE_OPERATOR_BUDGET:
            raise DimensionBudgetExceeded(
                f"dense operator would exceed dimension {DENSE_OPERATOR_BUDGET}"
            )
    out = np.zeros((total_dim, total_dim), dtype=complex)
    for term in op.terms:
        block = np.ones((1, 1), dtype=complex)
        for site in range(truncation):
            u = term.op_at(site)
            m = u.matrix if u is not None else np.eye(term.dim_at(site), dtype=complex)
            block = np.kron(block, m)
        out = out + term.coefficient * block
    return out


def dense_overlap(bra: DenseState, ket: DenseState) -> complex:
    if bra.dims != ket.dims:
        raise ShapeMismatch(f"dims {bra.dims} vs {ket.dims}")
    return complex(np.vdot(bra.amplitudes, ket.amplitudes))


def dense_expectation(matrix: np.ndarray, state: DenseState) -> complex:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (state.amplitudes.size, state.amplitudes.size):
        raise ShapeMismatch(
            f"operator shape {m.shape} vs state size {state.amplitudes.size}"
        )
    return complex(np.vdot(state.amplitudes, m @ state.amplitudes))


def dense_density(state: DenseState, system_dim: int) -> np.ndarray:
    """Trace out everything but the leading factor of dimension system_dim."""
    if not state.dims or state.dims[0] != system_dim:
        raise ShapeMismatch(
            f"leading dim {state.dims[:1]} does not match system dim {system_dim}"
        )
    a = state.amplitudes.reshape(system_dim, -1)
    return a @ a.conj().T
