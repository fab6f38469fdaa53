"""Combination rules: conjunctive, mixed, hybrid, and the PCR family.

All rules share one enumeration of the Cartesian product of focal elements:
each joint configuration is dispatched to every requested rule in a single
pass, in canonical order, so batch comparisons stay cheap and results are
deterministic regardless of which rules are requested together.

Conflict handling per configuration (product mass ``p``, responses ``Y_j``):

* ``conj``  -- ``p`` accumulates on the empty element.
* ``dp``    -- ``p`` moves to the union of the responses (full ignorance if
  even that union is impossible).
* ``dsmh``  -- like ``dp`` while some response is possible; when every
  response is itself impossible, ``p`` moves to the union of the responses'
  union decompositions, and to full ignorance if that is impossible too.
* PCR rules -- when every response is possible, ``p`` is split between the
  asserted elements proportionally to a per-rule weight (see below).  When a
  response is an impossible proposition, a per-configuration split has no
  sound target: those products are transferred to the singletons in
  proportion to the conjunctive singleton masses of the same combination,
  falling back to full ignorance when no singleton carries conjunctive mass.

PCR weights for one configuration, grouping the experts by asserted element
(group ``G`` with masses ``m_j``):

* ``pcr5``  -- product of the group's masses (repeated identical responses
  multiply).
* ``pcr6``  -- sum of the group's masses.
* ``pcrf``  -- sum of ``m_j ** alpha`` over the group.
* ``pcrg``  -- ``(sum of the group's masses) ** alpha``.

With ``alpha = 1`` both generalized rules coincide with ``pcr6``, and with
two sources ``pcr5`` equals ``pcr6``.  Redistribution terms with a zero
denominator are skipped (they cannot occur for focal masses, which are
strictly positive).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bba import MassFunction, common_model, iter_configurations
from .errors import ParseError, ValidationError
from .frame import ConstraintModel, LatticeElement, atom, union_decomposition

__all__ = [
    "RULE_KINDS",
    "RuleSpec",
    "parse_rule_spec",
    "parse_rule_list",
    "combine_all",
    "combine",
    "combine_conjunctive",
    "combine_dubois_prade",
    "combine_dsmh",
    "combine_pcr5",
    "combine_pcr6",
    "combine_pcrf",
    "combine_pcrg",
]

RULE_KINDS = ("conj", "dp", "dsmh", "pcr5", "pcr6", "pcrf", "pcrg")
_PCR_KINDS = frozenset({"pcr5", "pcr6", "pcrf", "pcrg"})
_ALPHA_KINDS = frozenset({"pcrf", "pcrg"})


@dataclass(frozen=True)
class RuleSpec:
    """A combination rule selection; ``alpha`` only applies to pcrf/pcrg."""

    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in RULE_KINDS:
            raise ValidationError(f"unknown rule kind {self.kind!r}")
        if self.kind in _ALPHA_KINDS:
            if self.alpha is None or not self.alpha > 0:
                raise ValidationError(f"rule {self.kind!r} needs alpha > 0")
        elif self.alpha is not None:
            object.__setattr__(self, "alpha", None)  # ignored for other kinds

    @property
    def label(self) -> str:
        if self.kind in _ALPHA_KINDS:
            return f"{self.kind}:{self.alpha:g}"
        return self.kind


def parse_rule_spec(text: str) -> RuleSpec:
    """Parse a rule identifier: conj, dp, dsmh, pcr5, pcr6, pcrf:a, pcrg:a."""
    body = text.strip()
    if ":" in body:
        kind, _, alpha_text = body.partition(":")
        kind = kind.strip()
        if kind not in _ALPHA_KINDS:
            raise ParseError(f"rule {kind!r} does not take a parameter")
        try:
            alpha = float(alpha_text)
        except ValueError:
            raise ParseError(f"bad alpha value {alpha_text!r} in rule {text!r}") from None
        return RuleSpec(kind, alpha)
    if body not in RULE_KINDS:
        raise ParseError(f"unknown rule {text!r}")
    if body in _ALPHA_KINDS:
        raise ParseError(f"rule {body!r} needs an alpha, e.g. {body}:1")
    return RuleSpec(body)


def parse_rule_list(text: str) -> list[RuleSpec]:
    specs = [parse_rule_spec(part) for part in text.split(",") if part.strip()]
    if not specs:
        raise ParseError("empty rule list")
    return specs


# ---------------------------------------------------------------------------
# The shared combination engine
# ---------------------------------------------------------------------------

def combine_all(bbas: Sequence[MassFunction], specs: Iterable[RuleSpec],
                under: ConstraintModel | None = None) -> dict[str, MassFunction]:
    """Combine ``bbas`` with every requested rule in one enumeration pass.

    ``under`` optionally supplies a combination model that refines the
    sources' own model (e.g. sources expressed on the free model combined
    with extra exclusivity constraints); it defaults to the sources' model.
    Results are expressed over the combination model.
    """
    bbas = list(bbas)
    model = common_model(bbas)
    if under is None:
        under = model
    elif not under.refines(model):
        raise ValidationError("combination model must refine the sources' model")
    specs = list(specs)
    if not specs:
        raise ValidationError("no combination rules requested")
    seen_labels = set()
    for spec in specs:
        if spec.label in seen_labels:
            raise ValidationError(f"duplicate rule {spec.label!r}")
        seen_labels.add(spec.label)
    for m in bbas:
        for element, _ in m.items():
            if element.bits == 0:
                raise ValidationError("input mass functions may not carry mass on the empty element")

    frame = model.frame
    dead = under.dead_mask
    theta = under.theta
    empty = under.empty
    pcr_specs = [s for s in specs if s.kind in _PCR_KINDS]

    acc: dict[str, dict[LatticeElement, float]] = {s.label: defaultdict(float) for s in specs}
    conjunctive_clean: dict[LatticeElement, float] = defaultdict(float)
    blocked_pool = 0.0  # products of configurations asserting impossible elements

    for elements, product, meet_bits in iter_configurations(bbas):
        if meet_bits & ~dead != 0:
            meet_element = under.canonicalize(LatticeElement(frame, meet_bits))
            conjunctive_clean[meet_element] += product
            for spec in specs:
                acc[spec.label][meet_element] += product
            continue

        # conflicting configuration
        blocked = [e for e in elements if e.bits & ~dead == 0]
        join_bits = 0
        for e in elements:
            join_bits |= e.bits
        join_element = under.canonicalize(LatticeElement(frame, join_bits))

        for spec in specs:
            kind = spec.kind
            if kind == "conj":
                acc[spec.label][empty] += product
            elif kind == "dp":
                target = join_element if join_bits & ~dead != 0 else theta
                acc[spec.label][target] += product
            elif kind == "dsmh":
                if len(blocked) < len(elements):
                    target = join_element if join_bits & ~dead != 0 else theta
                else:
                    u_bits = 0
                    for e in elements:
                        u_bits |= union_decomposition(e).bits
                    if u_bits & ~dead != 0:
                        target = under.canonicalize(LatticeElement(frame, u_bits))
                    else:
                        target = theta
                acc[spec.label][target] += product

        if pcr_specs:
            if blocked:
                blocked_pool += product
                continue
            groups: dict[LatticeElement, list[float]] = {}
            for bba, element in zip(bbas, elements):
                groups.setdefault(under.canonicalize(element), []).append(bba[element])
            items = sorted(groups.items(), key=lambda kv: kv[0].canonical_key())
            for spec in pcr_specs:
                weights = [_group_weight(spec, masses) for _, masses in items]
                denom = sum(weights)
                if denom <= 0.0:
                    continue  # zero-denominator terms are skipped
                bucket = acc[spec.label]
                for (element, _), w in zip(items, weights):
                    bucket[element] += product * w / denom

    if pcr_specs and blocked_pool > 0.0:
        _transfer_blocked_pool(blocked_pool, conjunctive_clean, under,
                               [acc[s.label] for s in pcr_specs])

    results: dict[str, MassFunction] = {}
    for spec in specs:
        masses = {e: v for e, v in acc[spec.label].items() if v > 0.0}
        results[spec.label] = MassFunction(under, masses,
                                           _allow_empty_mass=spec.kind == "conj")
    return results


def _group_weight(spec: RuleSpec, masses: list[float]) -> float:
    if spec.kind == "pcr5":
        w = 1.0
        for m in masses:
            w *= m
        return w
    if spec.kind == "pcr6":
        return sum(masses)
    if spec.kind == "pcrf":
        return sum(m ** spec.alpha for m in masses)
    # pcrg
    return sum(masses) ** spec.alpha


def _transfer_blocked_pool(pool: float, conjunctive_clean: dict[LatticeElement, float],
                           under: ConstraintModel,
                           buckets: list[dict[LatticeElement, float]]) -> None:
    """Move products of impossible-response configurations onto singletons.

    The transfer follows the conjunctive singleton masses of the same
    combination; with no conjunctive singleton mass the pool lands on the
    full ignorance.
    """
    frame = under.frame
    singletons = [atom(frame, i) for i in range(frame.n)]
    weights = [conjunctive_clean.get(s, 0.0) for s in singletons]
    total = sum(weights)
    for bucket in buckets:
        if total > 0.0:
            for s, w in zip(singletons, weights):
                if w > 0.0:
                    bucket[s] += pool * w / total
        else:
            bucket[under.theta] += pool


# ---------------------------------------------------------------------------
# Single-rule entry points
# ---------------------------------------------------------------------------

def combine(bbas: Sequence[MassFunction], spec: RuleSpec,
            under: ConstraintModel | None = None) -> MassFunction:
    return combine_all(bbas, [spec], under)[spec.label]


def combine_conjunctive(bbas: Sequence[MassFunction],
                        under: ConstraintModel | None = None) -> MassFunction:
    """Unnormalized conjunctive rule; conflicting mass stays on the empty element."""
    return combine(bbas, RuleSpec("conj"), under)


def combine_dubois_prade(bbas: Sequence[MassFunction],
                         under: ConstraintModel | None = None) -> MassFunction:
    """Mixed rule: conflicting products are moved to the union of the responses."""
    return combine(bbas, RuleSpec("dp"), under)


def combine_dsmh(bbas: Sequence[MassFunction],
                 under: ConstraintModel | None = None) -> MassFunction:
    """Hybrid rule: conflicts go to unions, or to union decompositions when
    every response is impossible under the combination model."""
    return combine(bbas, RuleSpec("dsmh"), under)


def combine_pcr5(bbas: Sequence[MassFunction],
                 under: ConstraintModel | None = None) -> MassFunction:
    """Proportional conflict redistribution with multiplicative grouping."""
    return combine(bbas, RuleSpec("pcr5"), under)


def combine_pcr6(bbas: Sequence[MassFunction],
                 under: ConstraintModel | None = None) -> MassFunction:
    """Proportional conflict redistribution, one share per expert."""
    return combine(bbas, RuleSpec("pcr6"), under)


def combine_pcrf(bbas: Sequence[MassFunction], alpha: float,
                 under: ConstraintModel | None = None) -> MassFunction:
    """PCR with per-expert weights transformed by ``x ** alpha``."""
    return combine(bbas, RuleSpec("pcrf", alpha), under)


def combine_pcrg(bbas: Sequence[MassFunction], alpha: float,
                 under: ConstraintModel | None = None) -> MassFunction:
    """PCR with group-sum weights transformed by ``x ** alpha``."""
    return combine(bbas, RuleSpec("pcrg", alpha), under)
