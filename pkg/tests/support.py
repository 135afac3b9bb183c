"""Shared builders for randomized tests."""

from __future__ import annotations

import numpy as np

import qsectors as q
from qsectors.operators import (
    ConstantOperatorTail,
    FactoredOperator,
    FactorOperator,
    IdentityTail,
    OperatorTerm,
)


def random_factor(rng: np.random.Generator, dim: int, unit: bool = True) -> q.FactorVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    if unit:
        v = v / np.linalg.norm(v)
    return q.FactorVector(tuple(complex(c) for c in v))


def random_product_state(
    rng: np.random.Generator,
    dim: int = 2,
    max_prefix: int = 3,
    unit: bool = True,
    parametric: bool = False,
) -> q.ProductState:
    prefix = tuple(
        random_factor(rng, dim, unit) for _ in range(int(rng.integers(0, max_prefix + 1)))
    )
    if not parametric:
        return q.ProductState(prefix, q.ConstantTail(random_factor(rng, dim, unit)))
    limit = random_factor(rng, dim, unit=True)
    direction = random_factor(rng, dim, unit=True)
    ratio = float(rng.uniform(0.2, 0.7))
    base = np.asarray(limit.amplitudes)
    step = np.asarray(direction.amplitudes)

    def fn(n: int) -> q.FactorVector:
        v = base + (ratio ** n) * 0.3 * step
        if unit:
            v = v / np.linalg.norm(v)
        return q.FactorVector(tuple(complex(c) for c in v))

    # normalizing shifts each factor by at most twice the raw deviation
    decay = q.DecaySpec("geometric", ratio=ratio, scale=1.0)
    return q.ProductState(prefix, q.ParametricTail(dim, fn, limit, decay))


def random_operator(
    rng: np.random.Generator,
    dim: int = 2,
    n_terms: int = 2,
    max_prefix: int = 2,
) -> FactoredOperator:
    terms = []
    for _ in range(n_terms):
        prefix = tuple(
            FactorOperator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
            for _ in range(int(rng.integers(0, max_prefix + 1)))
        )
        if rng.random() < 0.5:
            tail = IdentityTail(dim)
        else:
            tail = ConstantOperatorTail(
                FactorOperator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
            )
        terms.append(
            OperatorTerm(complex(rng.normal(), rng.normal()), prefix, tail)
        )
    return FactoredOperator(tuple(terms))
