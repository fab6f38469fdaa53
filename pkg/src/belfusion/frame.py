"""Frames of discernment and the proposition lattice they generate.

A frame is an ordered list of class names (atoms).  Propositions are built
from atoms with intersection and union only (no complement), so every
proposition is canonically a set of Venn-diagram regions ("minterms").  A
minterm is encoded as a bitmask over atom indices: encoding ``s`` denotes the
region lying inside exactly the atoms named by the set bits of ``s``.  An
element stores one bit per non-empty encoding (bit ``s - 1``), which makes
meet/join plain integer ``&``/``|`` and keeps equality canonical.

Constraint models declare which propositions are impossible.  They are stored
as a mask of dead minterms: an element is "empty under the model" exactly when
all of its minterms are dead.  The classical (Shafer) model kills every region
covered by two or more atoms, which recovers ordinary subsets of the frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import ParseError, ValidationError

__all__ = [
    "MAX_ATOMS",
    "MAX_ENUMERATION_ATOMS",
    "Frame",
    "LatticeElement",
    "ConstraintModel",
    "make_frame",
    "atom",
    "top",
    "bottom",
    "meet",
    "join",
    "enumerate_dsm_lattice",
    "union_decomposition",
    "is_empty_under",
    "dsm_cardinality",
    "free_model",
    "shafer_model",
    "hybrid_model",
    "parse_model_spec",
    "parse_element",
    "format_element",
]

# Full hyper-power-set enumeration grows like the Dedekind numbers, so it is
# capped hard; larger frames are still fine for subset-style (2^Theta) work.
MAX_ATOMS = 16
MAX_ENUMERATION_ATOMS = 5

_RESERVED_CHARS = set("&|()~,:")


@lru_cache(maxsize=None)
def _atom_masks(n: int) -> tuple[int, ...]:
    """Minterm bitmask of each atom: all encodings whose bit ``i`` is set."""
    masks = [0] * n
    for s in range(1, 1 << n):
        bit = 1 << (s - 1)
        for i in range(n):
            if s >> i & 1:
                masks[i] |= bit
    return tuple(masks)


@lru_cache(maxsize=1 << 17)
def _canonical_bits(n: int, dead_mask: int, bits: int) -> int:
    """Up-closure of the live minterms of ``bits`` (see ConstraintModel)."""
    live = bits & ~dead_mask
    if live == bits:
        return bits
    masks = _atom_masks(n)
    full = (1 << ((1 << n) - 1)) - 1
    result = 0
    remaining = live
    while remaining:
        low = remaining & -remaining
        encoding = low.bit_length()
        remaining ^= low
        up = full
        for i in range(n):
            if encoding >> i & 1:
                up &= masks[i]
        result |= up
    return result


@lru_cache(maxsize=1 << 17)
def _minimal_minterms(n: int, bits: int) -> tuple[int, ...]:
    out = []
    remaining = bits
    while remaining:
        low = remaining & -remaining
        s = low.bit_length()
        remaining ^= low
        for i in range(n):
            t = s & ~(1 << i)
            if t != s and t != 0 and bits >> (t - 1) & 1:
                break
        else:
            out.append(s)
    return tuple(out)


@lru_cache(maxsize=None)
def _shafer_dead_mask(n: int) -> int:
    """Mask of all minterms covered by at least two atoms."""
    dead = 0
    for s in range(1, 1 << n):
        if s.bit_count() >= 2:
            dead |= 1 << (s - 1)
    return dead


@dataclass(frozen=True)
class Frame:
    """An ordered frame of discernment."""

    atoms: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.atoms:
            raise ValidationError("a frame needs at least one class name")
        if len(self.atoms) > MAX_ATOMS:
            raise ValidationError(
                f"frame has {len(self.atoms)} classes; at most {MAX_ATOMS} supported"
            )
        seen = set()
        for name in self.atoms:
            if not name or not isinstance(name, str):
                raise ValidationError("class names must be non-empty strings")
            if any(c in _RESERVED_CHARS or c.isspace() for c in name):
                raise ValidationError(f"class name {name!r} contains a reserved character")
            if name in seen:
                raise ValidationError(f"duplicate class name {name!r}")
            seen.add(name)

    def __hash__(self) -> int:
        value = self.__dict__.get("_hash")
        if value is None:
            value = hash(self.atoms)
            object.__setattr__(self, "_hash", value)
        return value

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def full_mask(self) -> int:
        """Bitmask with every minterm present (the element Theta)."""
        return (1 << ((1 << self.n) - 1)) - 1

    def index(self, name: str) -> int:
        try:
            return self.atoms.index(name)
        except ValueError:
            raise ValidationError(f"unknown class {name!r} for frame {self.atoms}") from None

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Frame({', '.join(self.atoms)})"


@dataclass(frozen=True)
class LatticeElement:
    """A proposition over a frame, canonically a set of Venn minterms."""

    frame: Frame
    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits <= self.frame.full_mask:
            raise ValidationError("minterm bits out of range for this frame")

    def __hash__(self) -> int:
        value = self.__dict__.get("_hash")
        if value is None:
            value = hash((self.frame, self.bits))
            object.__setattr__(self, "_hash", value)
        return value

    # -- set structure -------------------------------------------------
    def __and__(self, other: "LatticeElement") -> "LatticeElement":
        _check_same_frame(self, other)
        return LatticeElement(self.frame, self.bits & other.bits)

    def __or__(self, other: "LatticeElement") -> "LatticeElement":
        _check_same_frame(self, other)
        return LatticeElement(self.frame, self.bits | other.bits)

    def is_subset(self, other: "LatticeElement") -> bool:
        _check_same_frame(self, other)
        return self.bits & other.bits == self.bits

    @property
    def is_bottom(self) -> bool:
        return self.bits == 0

    @property
    def is_top(self) -> bool:
        return self.bits == self.frame.full_mask

    def canonical_key(self) -> tuple[int, int]:
        """Total order: minterm count first, then encoding."""
        return (self.bits.bit_count(), self.bits)

    # -- structure queries ----------------------------------------------
    def minterms(self) -> Iterator[int]:
        """Yield minterm encodings (atom-index bitmasks) present in this element."""
        b = self.bits
        while b:
            low = b & -b
            yield low.bit_length()  # bit k encodes minterm k + 1
            b ^= low

    def minimal_minterms(self) -> tuple[int, ...]:
        """Minterms with no one-atom-smaller minterm also present.

        For elements of the hyper-power set (which are upward closed over
        minterm encodings) these are exactly the terms of the canonical
        union-of-intersections form.
        """
        return _minimal_minterms(self.frame.n, self.bits)

    def atom_support(self) -> int:
        """Bitmask (over atom indices) of atoms appearing in the canonical form."""
        support = 0
        for s in self.minimal_minterms():
            support |= s
        return support

    def in_hyper_power_set(self) -> bool:
        """Whether this element is reachable from the atoms with meets/joins.

        Such elements are exactly the upward-closed minterm sets: any minterm
        present forces every superset region to be present as well.
        """
        if self.bits == 0:
            return True
        for s in self.minterms():
            for i in range(self.frame.n):
                t = s | (1 << i)
                if t != s and not self.bits >> (t - 1) & 1:
                    return False
        return True

    @property
    def expression(self) -> str:
        return format_element(self)

    def __str__(self) -> str:
        return self.expression

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"<{self.expression}>"


def _check_same_frame(a: LatticeElement, b: LatticeElement) -> None:
    if a.frame != b.frame:
        raise ValidationError("elements belong to different frames")


# ---------------------------------------------------------------------------
# Constructors and basic operations
# ---------------------------------------------------------------------------

def make_frame(names: Iterable[str]) -> Frame:
    """Build a frame from an ordered collection of distinct class names."""
    return Frame(tuple(names))


def atom(frame: Frame, index: int) -> LatticeElement:
    if not 0 <= index < frame.n:
        raise ValidationError(f"atom index {index} out of range for {frame!r}")
    return LatticeElement(frame, _atom_masks(frame.n)[index])


def top(frame: Frame) -> LatticeElement:
    """The full ignorance (union of every atom)."""
    return LatticeElement(frame, frame.full_mask)


def bottom(frame: Frame) -> LatticeElement:
    return LatticeElement(frame, 0)


def meet(a: LatticeElement, b: LatticeElement) -> LatticeElement:
    return a & b


def join(a: LatticeElement, b: LatticeElement) -> LatticeElement:
    return a | b


def enumerate_dsm_lattice(frame: Frame) -> list[LatticeElement]:
    """All elements generated by the atoms under meet/join, plus bottom.

    Elements are the upward-closed minterm sets, generated directly rather
    than by pairwise closure.  Returned in canonical order (minterm count,
    then encoding); sizes for 1, 2, 3 atoms are 2, 5, 19.
    """
    n = frame.n
    if n > MAX_ENUMERATION_ATOMS:
        raise ValidationError(
            f"hyper-power-set enumeration supports at most {MAX_ENUMERATION_ATOMS} classes"
        )
    encodings = sorted(range(1, 1 << n), key=lambda s: (-s.bit_count(), s))
    strict_superset_mask = []
    for s in encodings:
        m = 0
        for t in range(1, 1 << n):
            if t != s and t & s == s:
                m |= 1 << (t - 1)
        strict_superset_mask.append(m)

    results: list[int] = []

    def extend(k: int, chosen: int) -> None:
        if k == len(encodings):
            results.append(chosen)
            return
        extend(k + 1, chosen)
        # adding a minterm is allowed only once all its supersets are in
        if strict_superset_mask[k] & ~chosen == 0:
            extend(k + 1, chosen | (1 << (encodings[k] - 1)))

    extend(0, 0)
    elements = [LatticeElement(frame, bits) for bits in results]
    elements.sort(key=LatticeElement.canonical_key)
    return elements


def union_decomposition(x: LatticeElement) -> LatticeElement:
    """The union of all atoms appearing in the canonical form of ``x``.

    Example over atoms A, B, C: the element (A&B)|(A&C) decomposes into the
    terms A&B and A&C, so the result is A|B|C.  Atoms map to themselves.
    """
    if x.bits == 0:
        raise ValidationError("the empty element has no union decomposition")
    if not x.in_hyper_power_set():
        raise ValidationError("element is not in the hyper-power set of its frame")
    masks = _atom_masks(x.frame.n)
    support = x.atom_support()
    bits = 0
    for i in range(x.frame.n):
        if support >> i & 1:
            bits |= masks[i]
    return LatticeElement(x.frame, bits)


# ---------------------------------------------------------------------------
# Constraint models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstraintModel:
    """Declares which propositions are identified with the empty set.

    ``dead_mask`` marks impossible minterms.  An element is empty under the
    model when every one of its minterms is dead, which makes the empty class
    closed downward (subsets of an empty element are empty) and closed under
    union.  No atom may be made empty.
    """

    frame: Frame
    dead_mask: int = 0
    label: str = "free"

    def __post_init__(self) -> None:
        if not 0 <= self.dead_mask <= self.frame.full_mask:
            raise ValidationError("dead-minterm mask out of range for this frame")
        for i, name in enumerate(self.frame.atoms):
            if _atom_masks(self.frame.n)[i] & ~self.dead_mask == 0:
                raise ValidationError(f"constraint model would make class {name!r} impossible")

    def is_empty(self, x: LatticeElement) -> bool:
        if x.frame != self.frame:
            raise ValidationError("element belongs to a different frame")
        return x.bits & ~self.dead_mask == 0

    def live_cardinality(self, x: LatticeElement) -> int:
        if x.frame != self.frame:
            raise ValidationError("element belongs to a different frame")
        return (x.bits & ~self.dead_mask).bit_count()

    def canonicalize(self, x: LatticeElement) -> LatticeElement:
        """The canonical representative of ``x`` modulo impossible regions.

        Elements differing only in dead minterms denote the same proposition
        under the model; the representative is the up-closure of the live
        minterms (so a model-empty element maps to the empty element, and
        under the Shafer model every proposition becomes a union of atoms).
        """
        if x.frame != self.frame:
            raise ValidationError("element belongs to a different frame")
        if self.dead_mask == 0:
            return x
        bits = _canonical_bits(self.frame.n, self.dead_mask, x.bits)
        return x if bits == x.bits else LatticeElement(self.frame, bits)

    def refines(self, other: "ConstraintModel") -> bool:
        """True when this model forbids everything ``other`` forbids."""
        return self.frame == other.frame and other.dead_mask & ~self.dead_mask == 0

    @property
    def theta(self) -> LatticeElement:
        return top(self.frame)

    @property
    def empty(self) -> LatticeElement:
        return bottom(self.frame)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"ConstraintModel({self.label}, {self.frame!r})"


def free_model(frame: Frame) -> ConstraintModel:
    """No impossible intersections (hyper-power-set mode)."""
    return ConstraintModel(frame, 0, "free")


def shafer_model(frame: Frame) -> ConstraintModel:
    """All classes pairwise exclusive (classical power-set mode)."""
    return ConstraintModel(frame, _shafer_dead_mask(frame.n), "shafer")


def hybrid_model(frame: Frame, empty_elements: Iterable[LatticeElement],
                 label: str = "hybrid") -> ConstraintModel:
    """Declare specific propositions impossible; subsets become empty too."""
    dead = 0
    for el in empty_elements:
        if el.frame != frame:
            raise ValidationError("empty-set declaration uses a different frame")
        dead |= el.bits
    return ConstraintModel(frame, dead, label)


def parse_model_spec(frame: Frame, spec: str) -> ConstraintModel:
    """Parse a model description: ``free``, ``shafer`` or ``hybrid:<expr>,...``."""
    text = spec.strip()
    if text == "free":
        return free_model(frame)
    if text == "shafer":
        return shafer_model(frame)
    if text.startswith("hybrid:"):
        body = text[len("hybrid:"):]
        parts = [p for p in body.split(",") if p.strip()]
        if not parts:
            raise ParseError("hybrid model needs at least one element expression")
        empties = [parse_element(frame, p) for p in parts]
        return hybrid_model(frame, empties, label=text)
    raise ParseError(f"unknown constraint model {spec!r}")


def is_empty_under(x: LatticeElement, model: ConstraintModel) -> bool:
    return model.is_empty(x)


def dsm_cardinality(x: LatticeElement, model: ConstraintModel) -> int:
    """Number of possible (non-dead) Venn regions composing ``x``.

    Under the Shafer model this is the ordinary cardinality of ``x`` viewed
    as a subset of the frame.
    """
    return model.live_cardinality(x)


# ---------------------------------------------------------------------------
# Textual element syntax: names, ``&`` (intersection, binds tighter), ``|``
# (union), ``~EMPTY~`` for the empty element; parentheses allowed.
# ---------------------------------------------------------------------------

_EMPTY_TOKEN = "~EMPTY~"


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    name = ""
    for ch in text:
        if ch in "&|()":
            if name:
                tokens.append(name)
                name = ""
            tokens.append(ch)
        elif ch.isspace():
            if name:
                tokens.append(name)
                name = ""
        else:
            name += ch
    if name:
        tokens.append(name)
    return tokens


def parse_element(frame: Frame, text: str) -> LatticeElement:
    """Parse an element expression such as ``A&B|A&C`` over ``frame``."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty element expression")
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_factor() -> LatticeElement:
        tok = peek()
        if tok is None:
            raise ParseError(f"unexpected end of expression in {text!r}")
        if tok == "(":
            take()
            el = parse_union()
            if peek() != ")":
                raise ParseError(f"missing ')' in {text!r}")
            take()
            return el
        if tok in {"&", "|", ")"}:
            raise ParseError(f"unexpected {tok!r} in {text!r}")
        take()
        if tok == _EMPTY_TOKEN:
            return bottom(frame)
        if "~" in tok:
            raise ParseError(f"bad token {tok!r} in {text!r}")
        if tok not in frame.atoms:
            raise ParseError(f"unknown class {tok!r} in {text!r}")
        return atom(frame, frame.index(tok))

    def parse_intersection() -> LatticeElement:
        el = parse_factor()
        while peek() == "&":
            take()
            el = el & parse_factor()
        return el

    def parse_union() -> LatticeElement:
        el = parse_intersection()
        while peek() == "|":
            take()
            el = el | parse_intersection()
        return el

    result = parse_union()
    if pos != len(tokens):
        raise ParseError(f"trailing input in element expression {text!r}")
    return result


def format_element(x: LatticeElement) -> str:
    """Canonical expression: minimal intersection terms joined by ``|``."""
    return _format_element(x.frame, x.bits)


@lru_cache(maxsize=1 << 16)
def _format_element(frame: Frame, bits: int) -> str:
    if bits == 0:
        return _EMPTY_TOKEN
    terms = sorted(_minimal_minterms(frame.n, bits), key=lambda s: (s.bit_count(), s))
    parts = []
    for s in terms:
        names = [frame.atoms[i] for i in range(frame.n) if s >> i & 1]
        parts.append("&".join(names))
    return "|".join(parts)
