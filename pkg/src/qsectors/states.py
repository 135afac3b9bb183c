"""Core state model.

A state over a countable ordered family of factor spaces is stored as a
finite ``prefix`` of explicit per-factor vectors plus a ``tail`` rule that
describes every factor beyond the prefix.  Tail rules are either a constant
vector repeated forever or a declared parametric family.  All types here are
immutable; operations return new objects.

Site indices are absolute and 0-based throughout, so materializing tail
factors into the prefix never changes which vector lives at a given site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

from .errors import (
    IndexOutOfRange,
    InvalidAmplitude,
    ShapeMismatch,
    UndeclaredTailClass,
    ZeroNormFactor,
)

__all__ = [
    "FactorVector",
    "DecaySpec",
    "ConstantTail",
    "ParametricTail",
    "TailRule",
    "ProductState",
    "CompositeState",
    "make_product_state",
    "basis_vector",
    "factor_overlap",
    "shapes_match",
    "ensure_same_shape",
    "distance",
]

# Per-factor overlaps closer to 1 than this are treated as exactly 1 when
# series verdicts are at stake; keep in sync with the sector tolerances.
ALIGNMENT_SNAP = 1e-12


def _as_complex_tuple(values: Iterable[complex]) -> tuple[complex, ...]:
    out = []
    for v in values:
        c = complex(v)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise InvalidAmplitude(f"non-finite amplitude {c!r}")
        out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class FactorVector:
    """One factor-space vector: a finite tuple of complex amplitudes."""

    amplitudes: tuple[complex, ...]
    norm_sq: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        amps = _as_complex_tuple(self.amplitudes)
        if not amps:
            raise InvalidAmplitude("factor vector needs at least one amplitude")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(
            self, "norm_sq", sum(c.real * c.real + c.imag * c.imag for c in amps)
        )

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    def scaled(self, factor: complex) -> "FactorVector":
        return FactorVector(tuple(factor * c for c in self.amplitudes))

    def normalized(self) -> "FactorVector":
        """Divide by the modulus of the vector; the phase is untouched."""
        n = self.norm
        if n == 0.0:
            raise ZeroNormFactor("cannot normalize a zero vector")
        if n == 1.0:
            return self
        return self.scaled(1.0 / n)

    def distance_to(self, other: "FactorVector") -> float:
        if other.dim != self.dim:
            raise ShapeMismatch(f"dims {self.dim} vs {other.dim}")
        return math.sqrt(
            sum(abs(a - b) ** 2 for a, b in zip(self.amplitudes, other.amplitudes))
        )


def basis_vector(dim: int, index: int) -> FactorVector:
    if not 0 <= index < dim:
        raise IndexOutOfRange(f"basis index {index} outside dim {dim}")
    return FactorVector(tuple(1.0 + 0j if k == index else 0j for k in range(dim)))


def factor_overlap(bra: FactorVector, ket: FactorVector) -> complex:
    """<bra|ket> with the bra conjugated."""
    if bra.dim != ket.dim:
        raise ShapeMismatch(f"factor dims differ: {bra.dim} vs {ket.dim}")
    return sum(
        a.conjugate() * b for a, b in zip(bra.amplitudes, ket.amplitudes)
    )


_DECAY_KINDS = ("eventually-constant", "geometric", "p-series", "custom-certified")


@dataclass(frozen=True)
class DecaySpec:
    """Declared decay class of ``factor_fn(n) - limit`` for a parametric tail.

    The declaration is a certification supplied by the caller:

    - ``eventually-constant``: the factor equals the limit for n >= rank.
    - ``geometric``: norm distance bounded by scale * ratio**n, ratio < 1.
    - ``p-series``: norm distance bounded by scale * (n+1)**(-p).
    - ``custom-certified``: the summed distances are certified <= scale.
    """

    kind: str
    ratio: float | None = None
    p: float | None = None
    rank: int | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _DECAY_KINDS:
            raise UndeclaredTailClass(f"unknown decay class {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale >= 0.0):
            raise UndeclaredTailClass("decay scale must be finite and nonnegative")
        if self.kind == "geometric":
            if self.ratio is None or not 0.0 <= self.ratio < 1.0:
                raise UndeclaredTailClass("geometric decay needs 0 <= ratio < 1")
        if self.kind == "p-series":
            if self.p is None or self.p <= 0.0:
                raise UndeclaredTailClass("p-series decay needs p > 0")
        if self.kind == "eventually-constant":
            if self.rank is None or self.rank < 0:
                raise UndeclaredTailClass("eventually-constant decay needs rank >= 0")

    @property
    def summable(self) -> bool:
        """Whether the declaration certifies a convergent distance series."""
        if self.kind == "p-series":
            return self.p is not None and self.p > 1.0
        return True

    def bound(self, n: int) -> float:
        if self.kind == "eventually-constant":
            return 0.0 if n >= (self.rank or 0) else self.scale
        if self.kind == "geometric":
            return self.scale * self.ratio**n
        if self.kind == "p-series":
            return self.scale * (n + 1) ** (-self.p)
        return self.scale

    def series_bound(self, start: int) -> float:
        """Upper bound on the summed distances over sites n >= start."""
        if self.kind == "eventually-constant":
            return self.scale * max((self.rank or 0) - start, 0)
        if self.kind == "geometric":
            return self.scale * self.ratio**start / (1.0 - self.ratio)
        if self.kind == "p-series":
            if self.p <= 1.0:
                return math.inf
            m = start + 1
            return self.scale * (m ** (-self.p) + m ** (1.0 - self.p) / (self.p - 1.0))
        return self.scale


@dataclass(frozen=True)
class ConstantTail:
    """Every factor beyond the prefix is this vector."""

    vector: FactorVector

    @property
    def dim(self) -> int:
        return self.vector.dim

    @property
    def norm_sq(self) -> float:
        return self.vector.norm_sq

    def factor_at(self, site: int) -> FactorVector:
        return self.vector


@dataclass(frozen=True)
class ParametricTail:
    """Factors beyond the prefix come from a pure closed-form callback.

    ``factor_fn`` receives the absolute 0-based site index.  ``limit`` is the
    vector the factors approach and ``decay`` certifies how fast; series tests
    lean on that certification, so callers own its correctness.
    """

    dim: int
    factor_fn: Callable[[int], FactorVector]
    limit: FactorVector
    decay: DecaySpec

    def __post_init__(self) -> None:
        if self.decay is None or not isinstance(self.decay, DecaySpec):
            raise UndeclaredTailClass("parametric tail needs a declared DecaySpec")
        if self.limit.dim != self.dim:
            raise ShapeMismatch(
                f"tail limit dim {self.limit.dim} differs from declared {self.dim}"
            )
        for probe in (0, 1, 5):
            v = self.factor_fn(probe)
            if not isinstance(v, FactorVector):
                raise InvalidAmplitude("factor_fn must return FactorVector")
            if v.dim != self.dim:
                raise ShapeMismatch(
                    f"factor_fn({probe}) has dim {v.dim}, declared {self.dim}"
                )

    def factor_at(self, site: int) -> FactorVector:
        return self.factor_fn(site)


TailRule = Union[ConstantTail, ParametricTail]


def _tail_descriptor(tail: TailRule) -> tuple[FactorVector, DecaySpec]:
    """(limit vector, decay) view that unifies both tail kinds."""
    if isinstance(tail, ConstantTail):
        return tail.vector, DecaySpec(kind="eventually-constant", rank=0, scale=0.0)
    return tail.limit, tail.decay


@dataclass(frozen=True)
class ProductState:
    """A single elementary product over all factor spaces."""

    prefix: tuple[FactorVector, ...]
    tail: TailRule
    label: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(self.prefix))
        for f in self.prefix:
            if not isinstance(f, FactorVector):
                raise InvalidAmplitude("prefix entries must be FactorVector")
        if not isinstance(self.tail, (ConstantTail, ParametricTail)):
            raise UndeclaredTailClass(
                "state tail must be ConstantTail or ParametricTail"
            )

    @property
    def prefix_len(self) -> int:
        return len(self.prefix)

    @property
    def tail_dim(self) -> int:
        return self.tail.dim

    def dim_at(self, site: int) -> int:
        if site < len(self.prefix):
            return self.prefix[site].dim
        return self.tail.dim

    def factor_at(self, site: int) -> FactorVector:
        if site < 0:
            raise IndexOutOfRange(f"negative site {site}")
        if site < len(self.prefix):
            return self.prefix[site]
        return self.tail.factor_at(site)

    def as_composite(self, coefficient: complex = 1.0 + 0j) -> "CompositeState":
        return CompositeState(((complex(coefficient), self),))

    def sequence_class(self):
        from . import sectors

        return sectors.classify_sequence(self)

    @property
    def is_convergent_sequence(self) -> bool:
        return self.sequence_class().kind in (
            "ConvergentSequence",
            "NonTrivialConvergentSequence",
        )

    @property
    def is_nontrivial_convergent_sequence(self) -> bool:
        return self.sequence_class().kind == "NonTrivialConvergentSequence"


@dataclass(frozen=True)
class CompositeState:
    """Finite linear combination of same-shaped product states."""

    terms: tuple[tuple[complex, ProductState], ...]

    def __post_init__(self) -> None:
        terms = tuple((complex(c), s) for c, s in self.terms)
        if not terms:
            raise InvalidAmplitude("composite state needs at least one term")
        for c, s in terms:
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise InvalidAmplitude(f"non-finite coefficient {c!r}")
            if not isinstance(s, ProductState):
                raise InvalidAmplitude("composite terms must hold ProductState")
        first = terms[0][1]
        for _, s in terms[1:]:
            ensure_same_shape(first, s)
        object.__setattr__(self, "terms", terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def max_prefix_len(self) -> int:
        return max(s.prefix_len for _, s in self.terms)

    def scaled(self, factor: complex) -> "CompositeState":
        return CompositeState(tuple((factor * c, s) for c, s in self.terms))


def make_product_state(
    prefix: Sequence[FactorVector | Sequence[complex]],
    tail: TailRule,
    label: str | None = None,
) -> ProductState:
    """Build a validated product state; raw amplitude sequences are coerced."""
    factors = tuple(
        f if isinstance(f, FactorVector) else FactorVector(tuple(f)) for f in prefix
    )
    return ProductState(prefix=factors, tail=tail, label=label)


def shapes_match(a: ProductState | CompositeState, b: ProductState | CompositeState) -> bool:
    try:
        ensure_same_shape(a, b)
    except ShapeMismatch:
        return False
    return True


def ensure_same_shape(
    a: ProductState | CompositeState, b: ProductState | CompositeState
) -> None:
    """Raise ShapeMismatch unless dims agree position-by-position."""
    a_states = [s for _, s in a.terms] if isinstance(a, CompositeState) else [a]
    b_states = [s for _, s in b.terms] if isinstance(b, CompositeState) else [b]
    span = max(s.prefix_len for s in a_states + b_states)
    sa, sb = a_states[0], b_states[0]
    for site in range(span):
        if sa.dim_at(site) != sb.dim_at(site):
            raise ShapeMismatch(
                f"dim {sa.dim_at(site)} vs {sb.dim_at(site)} at site {site}"
            )
    if sa.tail_dim != sb.tail_dim:
        raise ShapeMismatch(f"tail dims differ: {sa.tail_dim} vs {sb.tail_dim}")


def distance(
    a: ProductState | CompositeState,
    b: ProductState | CompositeState,
    truncation: int,
) -> float:
    """<A-B|A-B> at the given truncation.

    The accumulation is arranged symmetrically so distance(a, b) equals
    distance(b, a) bit for bit and distance(a, a) is exactly 0.
    """
    from .overlaps import composite_overlap

    ca = a.as_composite() if isinstance(a, ProductState) else a
    cb = b.as_composite() if isinstance(b, ProductState) else b
    ensure_same_shape(ca, cb)
    self_a = composite_overlap(ca, ca, truncation)
    self_b = composite_overlap(cb, cb, truncation)
    cross = composite_overlap(ca, cb, truncation) + composite_overlap(cb, ca, truncation)
    return ((self_a + self_b) - cross).real
