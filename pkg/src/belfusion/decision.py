"""Decision functionals over fused mass functions.

Credibility sums the masses of focal elements contained in the queried
proposition; plausibility sums the masses of focal elements whose canonical
decomposition shares at least one class with it; the pignistic probability
spreads each focal mass uniformly over its possible Venn regions and
renormalizes away any mass stranded on the empty element.  Under an
all-exclusive (Shafer) model these are the classical bel/pl/betP; on the
hyper-power set they are the generalized forms weighted by DSm cardinality.

Note that credibility, plausibility and the pignistic probability all grow
along the lattice order on ordinary subsets, so a decision between nested
propositions (e.g. a conjunction versus one of its classes) must use the
maximum of mass itself; the ``maxmass`` functional covers that case.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bba import MassFunction
from .errors import ParseError, ValidationError
from .frame import LatticeElement, atom, enumerate_dsm_lattice, top, MAX_ENUMERATION_ATOMS

__all__ = [
    "FUNCTIONALS",
    "CANDIDATE_SETS",
    "DecisionPolicy",
    "parse_policy",
    "credibility",
    "plausibility",
    "pignistic",
    "functional_value",
    "candidate_elements",
    "decide",
]

FUNCTIONALS = ("bel", "pl", "betp", "maxmass")
CANDIDATE_SETS = ("singletons", "all")


@dataclass(frozen=True)
class DecisionPolicy:
    """Which score to maximize and over which candidate propositions.

    ``explicit`` overrides the named candidate set with a fixed tuple of
    elements (used e.g. when the decision space is a coarsening of the
    frame).  Ties break toward the lowest canonical element.
    """

    functional: str = "betp"
    candidates: str = "singletons"
    explicit: tuple[LatticeElement, ...] | None = None

    def __post_init__(self) -> None:
        if self.functional not in FUNCTIONALS:
            raise ValidationError(f"unknown decision functional {self.functional!r}")
        if self.candidates not in CANDIDATE_SETS:
            raise ValidationError(f"unknown candidate set {self.candidates!r}")
        if self.explicit is not None and not self.explicit:
            raise ValidationError("explicit candidate list may not be empty")

    @property
    def label(self) -> str:
        return f"{self.functional}:{self.candidates}"


def parse_policy(text: str) -> DecisionPolicy:
    """Parse ``<bel|pl|betp|maxmass>:<singletons|all>``."""
    body = text.strip()
    functional, sep, candidates = body.partition(":")
    if not sep:
        candidates = "singletons"
    functional = functional.strip()
    candidates = candidates.strip()
    if functional not in FUNCTIONALS or candidates not in CANDIDATE_SETS:
        raise ParseError(f"bad decision policy {text!r}")
    return DecisionPolicy(functional, candidates)


def _check_query(m: MassFunction, x: LatticeElement) -> LatticeElement:
    if x.frame != m.frame:
        raise ValidationError("query element belongs to a different frame")
    if m.model.is_empty(x):
        raise ValidationError(f"query element {x} is empty under the {m.model.label} model")
    return m.model.canonicalize(x)


def credibility(m: MassFunction, x: LatticeElement) -> float:
    """Total mass of possible focal elements contained in ``x``.

    Containment is judged on possible minterms only, so subset structure
    under a constrained model matches the classical power-set reading.
    """
    x = _check_query(m, x)
    dead = m.model.dead_mask
    x_live = x.bits & ~dead
    value = 0.0
    for y, mass in m.items():
        y_live = y.bits & ~dead
        if y_live != 0 and y_live & x_live == y_live:
            value += mass
    return value


def plausibility(m: MassFunction, x: LatticeElement) -> float:
    """Total mass of possible focal elements sharing a class with ``x``.

    Two elements share a class when their canonical union decompositions
    have an atom in common; on ordinary subsets this is the usual
    non-empty-intersection test.
    """
    x = _check_query(m, x)
    x_support = x.atom_support()
    value = 0.0
    for y, mass in m.items():
        if m.model.is_empty(y):
            continue
        if y.atom_support() & x_support:
            value += mass
    return value


def pignistic(m: MassFunction, x: LatticeElement) -> float:
    """Pignistic probability of ``x``: cardinality-weighted mass spreading.

    Each focal element distributes its mass uniformly over its possible
    Venn regions; mass on the empty element is removed by renormalization.
    """
    x = _check_query(m, x)
    mass_empty = m.mass_on_empty()
    if 1.0 - mass_empty <= 0.0:
        raise ValidationError("all mass is on the empty element; pignistic undefined")
    dead = m.model.dead_mask
    x_live = x.bits & ~dead
    value = 0.0
    for y, mass in m.items():
        y_live = y.bits & ~dead
        if y_live == 0:
            continue
        overlap = (y_live & x_live).bit_count()
        if overlap:
            value += mass * overlap / y_live.bit_count()
    return value / (1.0 - mass_empty)


def functional_value(m: MassFunction, x: LatticeElement, functional: str) -> float:
    if functional == "bel":
        return credibility(m, x)
    if functional == "pl":
        return plausibility(m, x)
    if functional == "betp":
        return pignistic(m, x)
    if functional == "maxmass":
        return m[m.model.canonicalize(x)]
    raise ValidationError(f"unknown decision functional {functional!r}")


def candidate_elements(m: MassFunction, policy: DecisionPolicy) -> list[LatticeElement]:
    """Resolve the candidate propositions for a decision.

    ``singletons`` is the frame's classes.  ``all`` is every possible
    element of the hyper-power set when it is enumerable; for larger frames
    it falls back to the classes, the full ignorance and the focal elements,
    which is exhaustive for maximum-of-mass and for the monotone functionals.
    """
    frame = m.frame
    if policy.explicit is not None:
        return [_check_query(m, c) for c in policy.explicit]
    if policy.candidates == "singletons":
        return [atom(frame, i) for i in range(frame.n)]
    if frame.n <= MAX_ENUMERATION_ATOMS:
        unique: dict[LatticeElement, None] = {}
        for e in enumerate_dsm_lattice(frame):
            if not m.model.is_empty(e):
                unique.setdefault(m.model.canonicalize(e))
        return sorted(unique, key=LatticeElement.canonical_key)
    seen: dict[LatticeElement, None] = {}
    for i in range(frame.n):
        seen.setdefault(atom(frame, i))
    seen.setdefault(top(frame))
    for e, _ in m.items():
        if not m.model.is_empty(e):
            seen.setdefault(e)
    return sorted(seen, key=LatticeElement.canonical_key)


def decide(m: MassFunction, policy: DecisionPolicy) -> LatticeElement:
    """Return the candidate maximizing the policy's functional.

    Deterministic: equal scores resolve to the candidate with the lowest
    canonical key (fewest minterms, then encoding).
    """
    candidates = candidate_elements(m, policy)
    if not candidates:
        raise ValidationError("empty candidate set")
    best = None
    best_score = None
    for c in sorted(candidates, key=LatticeElement.canonical_key):
        score = functional_value(m, c, policy.functional)
        if best_score is None or score > best_score:
            best, best_score = c, score
    return best
