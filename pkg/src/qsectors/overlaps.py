"""Truncated and asymptotic overlaps.

Truncated overlaps multiply per-factor brackets up to a cutoff.  Short
products are multiplied directly; past ``DIRECT_LIMIT`` factors the running
product is kept as log-modulus plus unwrapped phase so sweeps survive far
past double-precision underflow.  A factor overlap of exactly zero
short-circuits the whole product.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from . import products
from .errors import InconclusiveSector, PreconditionViolated
from .sectors import same_sector
from .states import (
    CompositeState,
    ConstantTail,
    ProductState,
    _tail_descriptor,
    ensure_same_shape,
    factor_overlap,
)

__all__ = [
    "OverlapSweep",
    "truncated_overlap",
    "composite_overlap",
    "overlap_sweep",
    "asymptotic_overlap",
]

DIRECT_LIMIT = 64


class _PairAccumulator:
    """Running product of per-site overlaps for one (bra term, ket term)."""

    __slots__ = ("direct", "log_mod", "arg", "zero", "count")

    def __init__(self) -> None:
        self.direct = 1.0 + 0j
        self.log_mod = 0.0
        self.arg = 0.0
        self.zero = False
        self.count = 0

    def push(self, overlap: complex) -> None:
        self.count += 1
        if self.zero:
            return
        if overlap == 0:
            self.zero = True
            return
        self.direct *= overlap
        self.log_mod += math.log(abs(overlap))
        self.arg += math.atan2(overlap.imag, overlap.real)

    def value(self) -> complex:
        if self.zero:
            return 0j
        if self.count <= DIRECT_LIMIT:
            return self.direct
        return cmath.exp(complex(min(self.log_mod, 700.0), self.arg))


def _as_terms(state: ProductState | CompositeState) -> tuple[tuple[complex, ProductState], ...]:
    if isinstance(state, ProductState):
        return ((1.0 + 0j, state),)
    return state.terms


def truncated_overlap(
    bra: ProductState, ket: ProductState, truncation: int
) -> complex:
    """Product of the first ``truncation`` per-factor overlaps <bra_k|ket_k>."""
    if truncation < 0:
        raise PreconditionViolated(f"truncation {truncation} must be >= 0")
    ensure_same_shape(bra, ket)
    acc = _PairAccumulator()
    for site in range(truncation):
        acc.push(factor_overlap(bra.factor_at(site), ket.factor_at(site)))
    return acc.value()


def _combine(
    pairs: Sequence[tuple[complex, _PairAccumulator]], truncation: int
) -> tuple[complex, float]:
    """(value, log-modulus) of a coefficient-weighted sum of pair products."""
    if truncation <= DIRECT_LIMIT:
        total = sum(coeff * acc.direct if not acc.zero else 0j for coeff, acc in pairs)
        log_mod = math.log(abs(total)) if total != 0 else -math.inf
        return total, log_mod
    live = [(coeff, acc) for coeff, acc in pairs if not acc.zero]
    if not live:
        return 0j, -math.inf
    shift = max(acc.log_mod for _, acc in live)
    reduced = sum(
        coeff * cmath.exp(complex(acc.log_mod - shift, acc.arg)) for coeff, acc in live
    )
    if reduced == 0:
        return 0j, -math.inf
    log_mod = shift + math.log(abs(reduced))
    value = reduced * math.exp(shift) if shift < 700.0 else cmath.exp(
        complex(min(log_mod, 700.0), cmath.phase(reduced))
    )
    return value, log_mod


def composite_overlap(
    bra: ProductState | CompositeState,
    ket: ProductState | CompositeState,
    truncation: int,
) -> complex:
    """<bra|ket> at the cutoff, expanded over all term pairs."""
    if truncation < 0:
        raise PreconditionViolated(f"truncation {truncation} must be >= 0")
    ensure_same_shape(bra, ket)
    bra_terms = _as_terms(bra)
    ket_terms = _as_terms(ket)
    pairs = []
    for cm, sm in bra_terms:
        for cn, sn in ket_terms:
            acc = _PairAccumulator()
            for site in range(truncation):
                acc.push(factor_overlap(sm.factor_at(site), sn.factor_at(site)))
            pairs.append((cm.conjugate() * cn, acc))
    value, _ = _combine(pairs, truncation)
    return value


@dataclass(frozen=True)
class OverlapSweep:
    """Overlap values recorded at increasing truncations.

    ``log_modulus`` stays meaningful long after ``values`` underflow."""

    truncations: tuple[int, ...]
    values: tuple[complex, ...]
    log_modulus: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.truncations) == len(self.values) == len(self.log_modulus)):
            raise PreconditionViolated("sweep columns must have equal lengths")
        if any(b <= a for a, b in zip(self.truncations, self.truncations[1:])):
            raise PreconditionViolated("truncations must be strictly increasing")

    def first_below(self, eps: float) -> int | None:
        """Smallest recorded truncation with overlap modulus < eps."""
        if not (eps > 0.0):
            raise PreconditionViolated("eps must be positive")
        threshold = math.log(eps)
        for n, log_mod in zip(self.truncations, self.log_modulus):
            if log_mod < threshold:
                return n
        return None


def overlap_sweep(
    bra: ProductState | CompositeState,
    ket: ProductState | CompositeState,
    truncations: Sequence[int],
) -> OverlapSweep:
    """One pass over the factor stream, recording at each requested cutoff."""
    cuts = list(truncations)
    if not cuts:
        raise PreconditionViolated("at least one truncation is required")
    if any(n < 1 for n in cuts) or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise PreconditionViolated("truncations must be strictly increasing and >= 1")
    ensure_same_shape(bra, ket)
    bra_terms = _as_terms(bra)
    ket_terms = _as_terms(ket)
    pairs = [
        (cm.conjugate() * cn, sm, sn, _PairAccumulator())
        for cm, sm in bra_terms
        for cn, sn in ket_terms
    ]
    values: list[complex] = []
    logs: list[float] = []
    cut_iter = iter(cuts)
    next_cut = next(cut_iter)
    for site in range(cuts[-1]):
        for _, sm, sn, acc in pairs:
            acc.push(factor_overlap(sm.factor_at(site), sn.factor_at(site)))
        if site + 1 == next_cut:
            value, log_mod = _combine(
                [(coeff, acc) for coeff, _, _, acc in pairs], site + 1
            )
            values.append(value)
            logs.append(log_mod)
            next_cut = next(cut_iter, None)
            if next_cut is None:
                break
    return OverlapSweep(tuple(cuts), tuple(values), tuple(logs))


def _combined_tail_class(a: ProductState, b: ProductState) -> dict:
    """Product-series class tag implied by the two tail declarations."""
    _, da = _tail_descriptor(a.tail)
    _, db = _tail_descriptor(b.tail)
    kinds = {da.kind, db.kind}
    if "custom-certified" in kinds:
        return {"klass": "custom"}
    if kinds <= {"eventually-constant"}:
        return {"klass": "eventually-one"}
    ps = [d.p for d in (da, db) if d.kind == "p-series"]
    if ps:
        return {"klass": "p-series-log-modulus", "p": min(ps)}
    ratios = [d.ratio for d in (da, db) if d.kind == "geometric"]
    return {"klass": "geometric-modulus", "ratio": max(ratios)}


def asymptotic_overlap(bra: ProductState, ket: ProductState) -> complex:
    """Limit of the truncated overlap as the cutoff grows without bound.

    Exactly 0 across sectors; inside one sector the per-factor overlap
    product is classified and its (quasi-)convergence value returned.
    """
    verdict = same_sector(bra, ket)
    if verdict.kind == "DifferentSector":
        return 0j
    if verdict.kind == "Inconclusive":
        raise InconclusiveSector(
            "sector verdict is Inconclusive; the asymptotic overlap is undecided",
            certificate=verdict.certificate,
        )

    span = max(bra.prefix_len, ket.prefix_len)
    prefix = tuple(
        factor_overlap(bra.factor_at(k), ket.factor_at(k)) for k in range(span)
    )
    if isinstance(bra.tail, ConstantTail) and isinstance(ket.tail, ConstantTail):
        # SameSector already certified the tail bracket is 1 within tolerance
        tail: products.ConstantValue | products.ClosedFormTail = products.ConstantValue(
            1.0 + 0j
        )
    else:
        combined = _combined_tail_class(bra, ket)
        tail = products.ClosedFormTail(
            term_fn=lambda n: factor_overlap(
                bra.factor_at(n - 1), ket.factor_at(n - 1)
            ),
            **combined,
        )
    verdict2 = products.classify_product(
        products.ComplexSequenceSpec(prefix=prefix, tail=tail)
    )
    if verdict2.kind == "ConvergesTo":
        return verdict2.value
    if verdict2.kind == "QuasiConvergesToZero":
        return 0j
    raise InconclusiveSector(
        "overlap product did not settle within budget", verdict=verdict2.kind
    )
