"""Basic belief assignments (mass functions) and conflict statistics."""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator, Mapping

from .errors import ParseError, ValidationError
from .frame import ConstraintModel, Frame, LatticeElement, format_element, parse_element, top

__all__ = [
    "MASS_SUM_TOLERANCE",
    "MassFunction",
    "make_bba",
    "vacuous",
    "total_conflict",
    "auto_conflict",
    "parse_bba_blocks",
    "format_bba_blocks",
]

MASS_SUM_TOLERANCE = 1e-9


class MassFunction:
    """An immutable map from focal elements to masses summing to one.

    Mass on the empty element is refused by :func:`make_bba`; only the raw
    conjunctive combination may produce it, through the internal constructor.
    Renormalization is never performed silently: inputs that do not sum to
    one are rejected so that modelling bugs surface immediately.
    """

    __slots__ = ("model", "_masses", "_sorted")

    def __init__(self, model: ConstraintModel, masses: Mapping[LatticeElement, float],
                 *, _allow_empty_mass: bool = False):
        merged: dict[LatticeElement, float] = {}
        for element, mass in masses.items():
            if element.frame != model.frame:
                raise ValidationError("mass assigned to an element of a different frame")
            if mass < 0:
                raise ValidationError(f"negative mass {mass} on {element}")
            if mass == 0:
                continue
            if model.is_empty(element) and not (_allow_empty_mass and element.bits == 0):
                raise ValidationError(
                    f"mass on {element} which is empty under the {model.label} model"
                )
            element = model.canonicalize(element)
            merged[element] = merged.get(element, 0.0) + float(mass)
        total = sum(merged.values())
        if abs(total - 1.0) > MASS_SUM_TOLERANCE:
            raise ValidationError(f"masses sum to {total!r}, expected 1 within {MASS_SUM_TOLERANCE}")
        self.model = model
        self._masses = merged
        self._sorted = tuple(sorted(merged.items(), key=lambda kv: kv[0].canonical_key()))

    @property
    def frame(self) -> Frame:
        return self.model.frame

    def __getitem__(self, element: LatticeElement) -> float:
        return self._masses.get(element, 0.0)

    def __len__(self) -> int:
        return len(self._masses)

    def __iter__(self) -> Iterator[LatticeElement]:
        return iter(e for e, _ in self._sorted)

    def items(self) -> tuple[tuple[LatticeElement, float], ...]:
        """Focal elements and masses in canonical order."""
        return self._sorted

    def focal_elements(self) -> tuple[LatticeElement, ...]:
        return tuple(e for e, _ in self._sorted)

    def mass_on_empty(self) -> float:
        """Total mass sitting on model-empty elements (the conflict residue)."""
        return sum(v for e, v in self._sorted if self.model.is_empty(e))

    def to_assignments(self) -> list[tuple[LatticeElement, float]]:
        return list(self._sorted)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MassFunction):
            return NotImplemented
        return self.model == other.model and self._masses == other._masses

    def __hash__(self) -> int:
        return hash((self.model, self._sorted))

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        body = ", ".join(f"{e}: {v:.4g}" for e, v in self._sorted)
        return f"MassFunction({{{body}}})"


def make_bba(model: ConstraintModel,
             assignments: Mapping[LatticeElement, float] | Iterable[tuple[LatticeElement, float]],
             ) -> MassFunction:
    """Validate and canonicalize a mass assignment into a :class:`MassFunction`."""
    if not isinstance(assignments, Mapping):
        merged: dict[LatticeElement, float] = {}
        for element, mass in assignments:
            merged[element] = merged.get(element, 0.0) + mass
        assignments = merged
    return MassFunction(model, assignments)


def vacuous(model: ConstraintModel) -> MassFunction:
    """The totally ignorant assignment: all mass on the full union."""
    return MassFunction(model, {top(model.frame): 1.0})


# ---------------------------------------------------------------------------
# Joint-configuration enumeration and conflict statistics
# ---------------------------------------------------------------------------

def common_model(bbas: Iterable[MassFunction]) -> ConstraintModel:
    bbas = list(bbas)
    if len(bbas) < 2:
        raise ValidationError("need at least two mass functions")
    model = bbas[0].model
    for m in bbas[1:]:
        if m.model != model:
            raise ValidationError("mass functions use different constraint models")
    return model


def iter_configurations(bbas: list[MassFunction]) -> Iterator[tuple[tuple[LatticeElement, ...], float, int]]:
    """Yield (responses, product mass, meet bits) over the focal product.

    Enumeration follows the canonical order of each source's focal elements,
    which fixes the floating-point summation order of every consumer.
    """
    focals = [m.items() for m in bbas]
    for config in itertools.product(*focals):
        product = 1.0
        meet_bits = bbas[0].frame.full_mask
        elements = []
        for element, mass in config:
            product *= mass
            meet_bits &= element.bits
            elements.append(element)
        yield tuple(elements), product, meet_bits


def total_conflict(bbas: list[MassFunction], under: ConstraintModel | None = None) -> float:
    """Conjunctive mass falling on configurations whose meet is model-empty."""
    model = common_model(bbas)
    if under is None:
        under = model
    elif not under.refines(model):
        raise ValidationError("combination model must refine the sources' model")
    dead = under.dead_mask
    conflict = 0.0
    for _, product, meet_bits in iter_configurations(bbas):
        if meet_bits & ~dead == 0:
            conflict += product
    return conflict


def auto_conflict(bba: MassFunction, order: int) -> float:
    """Conflict of a source combined with ``order - 1`` copies of itself."""
    if order < 2:
        raise ValidationError("auto-conflict needs order >= 2")
    return total_conflict([bba] * order)


# ---------------------------------------------------------------------------
# Line-oriented BBA files: ``expression <tab> mass`` rows, one source per
# block, blocks separated by blank lines.  ``#`` starts a comment line.
# ---------------------------------------------------------------------------

def parse_bba_blocks(model: ConstraintModel, text: str) -> list[MassFunction]:
    blocks: list[list[tuple[LatticeElement, float]]] = []
    current: list[tuple[LatticeElement, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if current:
                blocks.append(current)
                current = []
            continue
        if line.startswith("#"):
            continue
        pieces = line.rsplit(None, 1)
        if len(pieces) != 2:
            raise ParseError(f"line {lineno}: expected 'element<TAB>mass', got {raw!r}")
        expr, mass_text = pieces
        try:
            mass = float(mass_text)
        except ValueError:
            raise ParseError(f"line {lineno}: bad mass value {mass_text!r}") from None
        current.append((parse_element(model.frame, expr), mass))
    if current:
        blocks.append(current)
    if not blocks:
        raise ParseError("no mass assignments found")
    return [make_bba(model, block) for block in blocks]


def format_bba_blocks(bbas: Iterable[MassFunction]) -> str:
    chunks = []
    for bba in bbas:
        lines = [f"{format_element(e)}\t{v:.12g}" for e, v in bba.items()]
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"
