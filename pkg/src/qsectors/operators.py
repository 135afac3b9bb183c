"""Factored operators acting factor-wise on product states.

An operator is a finite sum of terms; each term is a coefficient, a prefix
of explicit per-factor matrices, and a tail that is either the identity
(finite support) or a constant matrix repeated forever.  Applying a term to
a product state stays product-shaped, so sums of terms land in composite
states and truncated expectations reduce to per-factor brackets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionBudgetExceeded,
    InvalidAmplitude,
    NonFactorizableGenerator,
    NonHermitianGenerator,
    PreconditionViolated,
    ShapeMismatch,
)
from .overlaps import OverlapSweep, _combine, _PairAccumulator, composite_overlap
from .sectors import ALIGN_EXACT, ALIGN_GRAY, classify_sequence
from .states import (
    CompositeState,
    ConstantTail,
    DecaySpec,
    FactorVector,
    ParametricTail,
    ProductState,
    _tail_descriptor,
    factor_overlap,
)

__all__ = [
    "FactorOperator",
    "IdentityTail",
    "ConstantOperatorTail",
    "FactoredOperator",
    "SectorActionVerdict",
    "EvolutionResult",
    "identity_operator",
    "apply_operator",
    "sector_action",
    "expectation_sweep",
    "evolve",
]

EVOLVE_DIM_LIMIT = 16
_HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FactorOperator:
    """A square matrix on one factor space with a cached norm bound."""

    matrix: np.ndarray
    norm_bound: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ShapeMismatch(f"operator matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise InvalidAmplitude("operator matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "norm_bound", float(np.linalg.norm(m, 2)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(
            np.max(np.abs(self.matrix - np.eye(self.dim))) <= _HERMITIAN_TOL
        )

    @property
    def is_hermitian(self) -> bool:
        return bool(
            np.max(np.abs(self.matrix - self.matrix.conj().T)) <= _HERMITIAN_TOL
        )

    def apply_to(self, vec: FactorVector) -> FactorVector:
        if vec.dim != self.dim:
            raise ShapeMismatch(f"operator dim {self.dim} vs factor dim {vec.dim}")
        out = self.matrix @ np.asarray(vec.amplitudes, dtype=complex)
        return FactorVector(tuple(complex(c) for c in out))


def identity_operator(dim: int) -> FactorOperator:
    return FactorOperator(np.eye(dim, dtype=complex))


@dataclass(frozen=True)
class IdentityTail:
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ShapeMismatch("identity tail needs dim >= 1")


@dataclass(frozen=True)
class ConstantOperatorTail:
    operator: FactorOperator

    @property
    def dim(self) -> int:
        return self.operator.dim


OperatorTail = Union[IdentityTail, ConstantOperatorTail]


@dataclass(frozen=True)
class OperatorTerm:
    coefficient: complex
    prefix_ops: tuple[FactorOperator, ...]
    tail: OperatorTail

    def __post_init__(self) -> None:
        c = complex(self.coefficient)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise InvalidAmplitude(f"non-finite term coefficient {c!r}")
        object.__setattr__(self, "coefficient", c)
        object.__setattr__(self, "prefix_ops", tuple(self.prefix_ops))
        if not isinstance(self.tail, (IdentityTail, ConstantOperatorTail)):
            raise ShapeMismatch("term tail must be IdentityTail or ConstantOperatorTail")

    def op_at(self, site: int) -> FactorOperator | None:
        """Operator at a site; None means identity (no-op)."""
        if site < len(self.prefix_ops):
            return self.prefix_ops[site]
        if isinstance(self.tail, ConstantOperatorTail):
            return self.tail.operator
        return None

    def dim_at(self, site: int) -> int:
        if site < len(self.prefix_ops):
            return self.prefix_ops[site].dim
        return self.tail.dim


@dataclass(frozen=True)
class FactoredOperator:
    """Finite sum of factor-wise terms."""

    terms: tuple[OperatorTerm, ...]

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        if not terms:
            raise PreconditionViolated("factored operator needs at least one term")
        object.__setattr__(self, "terms", terms)
        first = terms[0]
        span = max(len(t.prefix_ops) for t in terms)
        for t in terms[1:]:
            for site in range(span):
                if t.dim_at(site) != first.dim_at(site):
                    raise ShapeMismatch(
                        f"terms disagree on dim at site {site}: "
                        f"{t.dim_at(site)} vs {first.dim_at(site)}"
                    )
            if t.tail.dim != first.tail.dim:
                raise ShapeMismatch("terms disagree on tail dim")

    @property
    def finite_support(self) -> bool:
        return all(isinstance(t.tail, IdentityTail) for t in self.terms)

    @property
    def support(self) -> tuple[int, ...]:
        """Prefix sites where some term acts non-trivially."""
        sites = set()
        for t in self.terms:
            for site, op in enumerate(t.prefix_ops):
                if not op.is_identity:
                    sites.add(site)
        return tuple(sorted(sites))

    def dim_at(self, site: int) -> int:
        return self.terms[0].dim_at(site)

    @property
    def tail_dim(self) -> int:
        return self.terms[0].tail.dim

    def norm_bound(self, truncation: int) -> float:
        """Triangle-inequality bound on the truncated operator norm."""
        total = 0.0
        for t in self.terms:
            prod = 1.0
            for site in range(truncation):
                op = t.op_at(site)
                prod *= op.norm_bound if op is not None else 1.0
            total += abs(t.coefficient) * prod
        return total


def _check_op_state_dims(op: FactoredOperator, state: ProductState) -> None:
    span = max(
        max(len(t.prefix_ops) for t in op.terms), state.prefix_len
    )
    for site in range(span):
        if op.dim_at(site) != state.dim_at(site):
            raise ShapeMismatch(
                f"operator dim {op.dim_at(site)} vs state dim "
                f"{state.dim_at(site)} at site {site}"
            )
    if op.tail_dim != state.tail_dim:
        raise ShapeMismatch(
            f"operator tail dim {op.tail_dim} vs state tail dim {state.tail_dim}"
        )


def _transform_tail(tail, op_tail: OperatorTail):
    if isinstance(op_tail, IdentityTail):
        return tail
    u = op_tail.operator
    if isinstance(tail, ConstantTail):
        return ConstantTail(u.apply_to(tail.vector))
    inner = tail.factor_fn
    decay = tail.decay
    return ParametricTail(
        dim=u.dim,
        factor_fn=lambda n: u.apply_to(inner(n)),
        limit=u.apply_to(tail.limit),
        decay=DecaySpec(
            kind=decay.kind,
            ratio=decay.ratio,
            p=decay.p,
            rank=decay.rank,
            # a bounded map stretches distances by at most its norm bound
            scale=decay.scale * u.norm_bound,
        ),
    )


def apply_operator(op: FactoredOperator, state: ProductState) -> CompositeState:
    """Act factor-wise; each term yields one product-state component."""
    _check_op_state_dims(op, state)
    out_terms = []
    for t in op.terms:
        span = max(len(t.prefix_ops), state.prefix_len)
        prefix = []
        for site in range(span):
            f = state.factor_at(site)
            u = t.op_at(site)
            prefix.append(f if u is None else u.apply_to(f))
        new_tail = _transform_tail(state.tail, t.tail)
        out_terms.append(
            (t.coefficient, ProductState(tuple(prefix), new_tail, label=state.label))
        )
    return CompositeState(tuple(out_terms))


_ACTION_KINDS = ("PreservesSector", "LeavesSector", "Inconclusive")


@dataclass(frozen=True)
class SectorActionVerdict:
    kind: str
    witness: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _ACTION_KINDS:
            raise PreconditionViolated(f"unknown action kind {self.kind!r}")


def sector_action(op: FactoredOperator, state: ProductState) -> SectorActionVerdict:
    """Whether acting with ``op`` can move ``state`` out of its sector."""
    _check_op_state_dims(op, state)
    cls = classify_sequence(state)
    if cls.kind != "NonTrivialConvergentSequence":
        raise PreconditionViolated(
            f"state is {cls.kind}; sector action needs NonTrivialConvergentSequence"
        )
    limit, _ = _tail_descriptor(state.tail)
    off_unit = [f.norm for f in state.prefix if abs(f.norm - 1.0) > ALIGN_GRAY]
    if off_unit or abs(limit.norm - 1.0) > ALIGN_GRAY:
        raise PreconditionViolated(
            "sector action is defined for unit-norm factors", norms=off_unit
        )

    if op.finite_support:
        return SectorActionVerdict(
            "PreservesSector",
            {"kind": "finite-support", "support": op.support},
        )

    term_reports = []
    leaves = None
    all_fixed = True
    any_surviving = False
    for idx, t in enumerate(op.terms):
        if t.coefficient == 0:
            continue
        span = max(len(t.prefix_ops), state.prefix_len)
        annihilated = False
        for site in range(span):
            u = t.op_at(site)
            if u is not None and u.apply_to(state.factor_at(site)).norm_sq == 0.0:
                annihilated = True
                break
        if annihilated:
            continue
        if isinstance(t.tail, IdentityTail):
            any_surviving = True
            term_reports.append({"term": idx, "tail": "identity", "residual": 0.0})
            continue
        u = t.tail.operator
        image = u.apply_to(limit)
        if image.norm_sq == 0.0:
            continue
        any_surviving = True
        bracket = factor_overlap(limit, image)
        residual = limit.distance_to(image)
        term_reports.append(
            {
                "term": idx,
                "tail_bracket_re": bracket.real,
                "tail_bracket_im": bracket.imag,
                "modulus_deficit": 1.0 - abs(bracket),
                "residual": residual,
            }
        )
        if abs(bracket) < 1.0 - ALIGN_GRAY:
            leaves = term_reports[-1]
        if not (abs(bracket - 1.0) <= ALIGN_EXACT and residual <= ALIGN_GRAY):
            all_fixed = False

    if not any_surviving:
        return SectorActionVerdict(
            "Inconclusive", {"reason": "operator annihilates the truncated state"}
        )
    if leaves is not None:
        return SectorActionVerdict("LeavesSector", {"witness": leaves})
    if all_fixed:
        return SectorActionVerdict(
            "PreservesSector", {"kind": "fixed-tail", "terms": term_reports}
        )
    return SectorActionVerdict(
        "Inconclusive",
        {"reason": "tail bracket neither aligned nor clearly contracting",
         "terms": term_reports},
    )


def expectation_sweep(
    op: FactoredOperator,
    state: ProductState,
    truncations: Sequence[int],
) -> OverlapSweep:
    """<state|op|state> restricted to the first N factors, per cutoff."""
    cuts = list(truncations)
    if not cuts:
        raise PreconditionViolated("at least one truncation is required")
    if any(n < 1 for n in cuts) or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise PreconditionViolated("truncations must be strictly increasing and >= 1")
    _check_op_state_dims(op, state)
    pairs = [(t.coefficient, t, _PairAccumulator()) for t in op.terms]
    values: list[complex] = []
    logs: list[float] = []
    cut_iter = iter(cuts)
    next_cut = next(cut_iter)
    for site in range(cuts[-1]):
        f = state.factor_at(site)
        for _, t, acc in pairs:
            u = t.op_at(site)
            image = f if u is None else u.apply_to(f)
            acc.push(factor_overlap(f, image))
        if site + 1 == next_cut:
            value, log_mod = _combine(
                [(coeff, acc) for coeff, _, acc in pairs], site + 1
            )
            values.append(value)
            logs.append(log_mod)
            next_cut = next(cut_iter, None)
            if next_cut is None:
                break
    return OverlapSweep(tuple(cuts), tuple(values), tuple(logs))


@dataclass(frozen=True)
class EvolutionResult:
    state: CompositeState
    survival: complex
    truncation: int


def _require_hermitian(op: FactorOperator, where: str) -> None:
    dev = float(np.max(np.abs(op.matrix - op.matrix.conj().T)))
    if dev > _HERMITIAN_TOL:
        raise NonHermitianGenerator(
            f"{where} deviates from Hermiticity by {dev:.3e}"
        )
    if op.dim > EVOLVE_DIM_LIMIT:
        raise DimensionBudgetExceeded(
            f"evolve handles factor dims up to {EVOLVE_DIM_LIMIT}, got {op.dim}"
        )


def evolve(
    generator: FactoredOperator,
    state: ProductState,
    t: float,
    truncation: int,
) -> EvolutionResult:
    """Apply exp(i * t * generator) factor-wise.

    Only single-term generators factorize site-by-site, so multi-term input
    is rejected rather than silently approximated; no global matrix
    exponential is ever assembled.
    """
    if len(generator.terms) != 1:
        raise NonFactorizableGenerator(
            "evolution factorizes only for single-term generators",
            n_terms=len(generator.terms),
        )
    term = generator.terms[0]
    coeff = term.coefficient
    if abs(coeff.imag) > _HERMITIAN_TOL:
        raise NonHermitianGenerator(
            f"generator coefficient {coeff!r} must be real"
        )
    scale = coeff.real
    for site, h in enumerate(term.prefix_ops):
        _require_hermitian(h, f"prefix generator at site {site}")
    exp_prefix = tuple(
        FactorOperator(expm(1j * t * scale * h.matrix)) for h in term.prefix_ops
    )
    if isinstance(term.tail, ConstantOperatorTail):
        _require_hermitian(term.tail.operator, "tail generator")
        tail: OperatorTail = ConstantOperatorTail(
            FactorOperator(expm(1j * t * scale * term.tail.operator.matrix))
        )
    else:
        tail = term.tail
    propagator = FactoredOperator(
        (OperatorTerm(1.0 + 0j, exp_prefix, tail),)
    )
    evolved = apply_operator(propagator, state)
    survival = composite_overlap(state, evolved, truncation)
    return EvolutionResult(state=evolved, survival=survival, truncation=truncation)
