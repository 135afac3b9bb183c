"""Sequence classes and sector membership.

A product state is a convergent sequence when the product of its factor
norms converges, and a non-trivial convergent sequence when the summed
absolute deviations of those norms from 1 converge.  Two non-trivial states
sit in the same sector exactly when the summed absolute deviations of their
per-factor overlaps from 1 converge.

Verdicts carry certificates (for convergent series) or witnesses (per-term
lower bounds) so that every claim can be re-verified independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import PreconditionViolated, ShapeMismatch, ZeroNormFactor
from .states import (
    ConstantTail,
    DecaySpec,
    FactorVector,
    ParametricTail,
    ProductState,
    _tail_descriptor,
    ensure_same_shape,
    factor_overlap,
)

__all__ = [
    "SequenceClass",
    "SectorVerdict",
    "classify_sequence",
    "same_sector",
    "normed_representative",
    "apply_finite_change",
]

# Deviations below ALIGN_EXACT are treated as exactly zero; deviations above
# ALIGN_GRAY are decisive.  The band between the two is reported Inconclusive
# rather than silently rounded either way.
ALIGN_EXACT = 1e-12
ALIGN_GRAY = 1e-9

_SEQ_KINDS = (
    "NotConvergentSequence",
    "ConvergentSequence",
    "NonTrivialConvergentSequence",
)
_SECTOR_KINDS = ("SameSector", "DifferentSector", "Inconclusive")


@dataclass(frozen=True)
class SequenceClass:
    kind: str
    evidence: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _SEQ_KINDS:
            raise PreconditionViolated(f"unknown sequence kind {self.kind!r}")


@dataclass(frozen=True)
class SectorVerdict:
    kind: str
    certificate: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _SECTOR_KINDS:
            raise PreconditionViolated(f"unknown sector kind {self.kind!r}")


def classify_sequence(state: ProductState) -> SequenceClass:
    """Norm-product behavior of a single product state."""
    prefix_norms = [f.norm for f in state.prefix]
    limit, decay = _tail_descriptor(state.tail)
    evidence: dict = {
        "limit_norm": limit.norm,
        "decay_kind": decay.kind,
        "summable": decay.summable,
        "prefix_norm_deviation": sum(abs(n - 1.0) for n in prefix_norms),
        "proven": True,
    }

    zero_at = next((i for i, n in enumerate(prefix_norms) if n == 0.0), None)
    if zero_at is None:
        zero_at = _zero_tail_site(state, decay)
    if zero_at is not None:
        evidence["zero_factor_at"] = zero_at
        evidence["note"] = "a zero factor makes the norm product converge to 0"
        return SequenceClass("ConvergentSequence", evidence)

    dev = abs(limit.norm - 1.0)
    if dev <= ALIGN_EXACT:
        if decay.summable:
            evidence["norm_series_bound"] = evidence["prefix_norm_deviation"] + (
                decay.series_bound(state.prefix_len)
            )
            return SequenceClass("NonTrivialConvergentSequence", evidence)
        return _probe_norm_series(state, evidence)
    if limit.norm < 1.0:
        evidence["note"] = "factor norms settle below 1, so the norm product is 0"
        return SequenceClass("ConvergentSequence", evidence)
    evidence["note"] = "factor norms settle above 1, so the norm product diverges"
    return SequenceClass("NotConvergentSequence", evidence)


def _zero_tail_site(state: ProductState, decay: DecaySpec) -> int | None:
    """Scan the early tail while the declared bound still allows zero norms."""
    limit, _ = _tail_descriptor(state.tail)
    if isinstance(state.tail, ConstantTail):
        return state.prefix_len if state.tail.vector.norm == 0.0 else None
    site = state.prefix_len
    checked = 0
    while checked < 1_000:
        bound = decay.bound(site)
        if bound < limit.norm / 2.0 and limit.norm > 0.0:
            return None
        if state.tail.factor_at(site).norm == 0.0:
            return site
        site += 1
        checked += 1
    return None


def _probe_norm_series(state: ProductState, evidence: dict) -> SequenceClass:
    """Numeric fallback when the declared class does not certify summability."""
    window = 4096
    start = state.prefix_len
    first = sum(
        abs(state.factor_at(start + k).norm - 1.0) for k in range(window)
    )
    second = sum(
        abs(state.factor_at(start + window + k).norm - 1.0) for k in range(window)
    )
    evidence["proven"] = False
    evidence["method"] = "numeric-probe"
    evidence["probe_window"] = window
    evidence["probe_sums"] = (first, second)
    if second <= max(ALIGN_EXACT * window, 0.25 * first):
        return SequenceClass("NonTrivialConvergentSequence", evidence)
    return SequenceClass("ConvergentSequence", evidence)


def same_sector(a: ProductState, b: ProductState) -> SectorVerdict:
    """Decide whether two non-trivial states carry the sector relation."""
    ensure_same_shape(a, b)
    for name, s in (("first", a), ("second", b)):
        cls = classify_sequence(s)
        if cls.kind != "NonTrivialConvergentSequence":
            raise PreconditionViolated(
                f"{name} state is {cls.kind}; sector membership needs "
                "NonTrivialConvergentSequence",
                classification=cls.kind,
            )

    span = max(a.prefix_len, b.prefix_len)
    prefix_deficits = [
        abs(factor_overlap(a.factor_at(k), b.factor_at(k)) - 1.0) for k in range(span)
    ]
    differing = tuple(
        k for k, d in enumerate(prefix_deficits) if d > ALIGN_EXACT
    )

    (u, decay_a) = _tail_descriptor(a.tail)
    (w, decay_b) = _tail_descriptor(b.tail)
    deficit_inf = abs(factor_overlap(u, w) - 1.0)

    certificate: dict = {
        "differing_prefix_indices": differing,
        "prefix_deficit_sum": sum(prefix_deficits),
        "limit_overlap_deficit": deficit_inf,
    }

    both_summable = decay_a.summable and decay_b.summable
    if deficit_inf <= ALIGN_EXACT:
        if not both_summable:
            certificate["reason"] = (
                "tail limits align but a declared class does not certify a "
                "summable approach"
            )
            return SectorVerdict("Inconclusive", certificate)
        tail_bound = (w.norm + decay_b.scale) * decay_a.series_bound(span) + (
            u.norm * decay_b.series_bound(span)
        )
        certificate["deficit_series_bound"] = (
            certificate["prefix_deficit_sum"] + tail_bound
        )
        certificate["method"] = (
            "constant-tails"
            if isinstance(a.tail, ConstantTail) and isinstance(b.tail, ConstantTail)
            else "declared-decay"
        )
        return SectorVerdict("SameSector", certificate)

    if deficit_inf > ALIGN_GRAY:
        witness_site = _witness_site(decay_a, decay_b, w.norm, u.norm, deficit_inf, span)
        if witness_site is not None:
            certificate["per_term_lower_bound"] = deficit_inf / 2.0
            certificate["from_site"] = witness_site
        else:
            certificate["note"] = (
                "per-term localization unavailable for the declared classes; "
                "the deficit series still diverges by comparison with the "
                "summable approach bounds"
            )
        return SectorVerdict("DifferentSector", certificate)

    certificate["reason"] = "limit overlap deficit falls in the tolerance gray zone"
    return SectorVerdict("Inconclusive", certificate)


def _witness_site(
    decay_a: DecaySpec,
    decay_b: DecaySpec,
    w_norm: float,
    u_norm: float,
    deficit_inf: float,
    start: int,
) -> int | None:
    """First site from which per-term deficits provably stay >= deficit/2."""
    site = max(start, 1)
    for _ in range(64):
        slack = decay_a.bound(site) * (w_norm + decay_b.bound(site)) + (
            u_norm * decay_b.bound(site)
        )
        if slack <= deficit_inf / 2.0:
            return site
        site *= 2
        if site > 10**7:
            break
    return None


def normed_representative(state: ProductState) -> ProductState:
    """Scale every factor to unit modulus, keeping its phase."""
    prefix = tuple(f.normalized() for f in state.prefix)
    tail = state.tail
    if isinstance(tail, ConstantTail):
        new_tail: ConstantTail | ParametricTail = ConstantTail(tail.vector.normalized())
    else:
        if tail.limit.norm == 0.0:
            raise ZeroNormFactor("parametric tail limit has zero norm")
        inner = tail.factor_fn
        limit = tail.limit.normalized()
        decay = DecaySpec(
            kind=tail.decay.kind,
            ratio=tail.decay.ratio,
            p=tail.decay.p,
            rank=tail.decay.rank,
            # normalizing both sides at worst doubles the distance bound
            scale=2.0 * tail.decay.scale / tail.limit.norm,
        )
        new_tail = ParametricTail(
            dim=tail.dim,
            factor_fn=lambda n: inner(n).normalized(),
            limit=limit,
            decay=decay,
        )
    return ProductState(prefix=prefix, tail=new_tail, label=state.label)


def apply_finite_change(
    state: ProductState, changes: dict[int, FactorVector]
) -> ProductState:
    """Replace factors at finitely many sites, keeping the tail rule.

    Sites are absolute and 0-based and may point past the current prefix;
    tail factors are materialized up to the largest changed site first.
    """
    if not changes:
        return state
    coerced: dict[int, FactorVector] = {}
    for site, vec in changes.items():
        if site < 0:
            raise PreconditionViolated(f"change site {site} must be >= 0")
        v = vec if isinstance(vec, FactorVector) else FactorVector(tuple(vec))
        if v.dim != state.dim_at(site):
            raise ShapeMismatch(
                f"change at site {site} has dim {v.dim}, state has {state.dim_at(site)}"
            )
        coerced[site] = v
    new_len = max(state.prefix_len, max(coerced) + 1)
    prefix = [state.factor_at(k) for k in range(new_len)]
    for site, v in coerced.items():
        prefix[site] = v
    return ProductState(prefix=tuple(prefix), tail=state.tail, label=state.label)
