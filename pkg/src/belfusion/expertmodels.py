"""Turning expert annotations and classifier scores into mass functions.

Annotation models cover a tile labelled by an expert with one or more
classes, each with a proportion and a certainty.  For a two-class frame:

* model 3 rewrites the problem onto three exclusive classes (only-A, only-B,
  both) and works on the classical power set;
* model 4 keeps the original two classes and puts mass directly on their
  conjunction, which needs the hyper-power set;
* model 5 splits the certainty-weighted proportions over the stated classes
  and leaves the remainder on the ignorance; it is valid in both settings
  and generalizes to any number of classes and per-level certainties.

Classifier outputs are handled by an adaptive calibration that keeps the two
strongest target scores, scales them so each classifier's long-run belief on
targets approaches a common level, and floors the ignorance mass so a single
over-confident source can never produce total conflict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .bba import MassFunction, make_bba
from .errors import ParseError, ValidationError
from .frame import ConstraintModel, Frame, atom, free_model, make_frame, shafer_model, top

__all__ = [
    "CERTAINTY_LEVELS",
    "CertaintyWeights",
    "AnnotationEntry",
    "TileAnnotation",
    "exclusive_frame",
    "model_m3",
    "model_m4",
    "model_m5",
    "model_m5_generalized",
    "ClassifierCalibrator",
    "read_annotations",
    "write_annotations",
    "read_scores",
    "write_scores",
    "read_truth",
    "write_truth",
]

CERTAINTY_LEVELS = ("sure", "moderately_sure", "not_sure")
PROPORTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CertaintyWeights:
    """Numeric weights for the three certainty levels (defaults 2/3, 1/2, 1/3)."""

    sure: float = 2.0 / 3.0
    moderately_sure: float = 0.5
    not_sure: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        if not 0.0 < self.not_sure <= self.moderately_sure <= self.sure <= 1.0:
            raise ValidationError("certainty weights must satisfy 0 < not_sure <= moderately_sure <= sure <= 1")

    def resolve(self, certainty: float | str) -> float:
        if isinstance(certainty, str):
            if certainty not in CERTAINTY_LEVELS:
                raise ValidationError(f"unknown certainty level {certainty!r}")
            return getattr(self, certainty)
        value = float(certainty)
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"certainty {value} outside [0, 1]")
        return value


@dataclass(frozen=True)
class AnnotationEntry:
    """One (class, proportion, certainty) statement inside a tile annotation."""

    class_name: str
    proportion: float
    certainty: float | str

    def __post_init__(self) -> None:
        if not 0.0 < self.proportion <= 1.0 + PROPORTION_TOLERANCE:
            raise ValidationError(f"proportion {self.proportion} outside (0, 1]")


@dataclass(frozen=True)
class TileAnnotation:
    """An expert's statement about one tile: class proportions with certainties.

    The same class may appear several times with different certainty levels
    (e.g. part of the tile is surely rock, part only possibly so).
    """

    expert_id: str
    entries: tuple[AnnotationEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValidationError("annotation needs at least one class entry")
        if sum(e.proportion for e in self.entries) > 1.0 + PROPORTION_TOLERANCE:
            raise ValidationError("proportions sum to more than 1")

    def classes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.class_name)
        return tuple(seen)


def _check_two_class(ann: TileAnnotation, frame: Frame) -> None:
    if frame.n != 2:
        raise ValidationError("this annotation model is defined for two-class frames")
    for name in ann.classes():
        if name not in frame.atoms:
            raise ValidationError(f"annotation mentions {name!r}, not a class of {frame.atoms}")


def exclusive_frame(frame: Frame) -> Frame:
    """The three-class exclusive rewrite of a two-class frame.

    Classes map to only-first, only-second, and both-present; their names
    are primed forms of the original ones.
    """
    if frame.n != 2:
        raise ValidationError("exclusive rewrite is defined for two-class frames")
    a, b = frame.atoms
    return make_frame((f"{a}'", f"{b}'", f"{a}{b}'"))


def model_m3(ann: TileAnnotation, frame: Frame,
             weights: CertaintyWeights | None = None) -> MassFunction:
    """Exclusive three-class annotation model on the classical power set.

    A single-class statement puts its certainty on the union of the matching
    exclusive class with the both-present class; a two-class statement puts
    the certainty-weighted proportion total on the both-present class.  The
    remainder is full ignorance.
    """
    weights = weights or CertaintyWeights()
    _check_two_class(ann, frame)
    refined = exclusive_frame(frame)
    model = shafer_model(refined)
    classes = ann.classes()
    both = atom(refined, 2)
    if len(classes) == 1:
        c = _single_class_certainty(ann, weights)
        said = atom(refined, frame.index(classes[0]))
        return make_bba(model, {said | both: c, top(refined): 1.0 - c})
    value = _proportion_certainty_total(ann, weights)
    return make_bba(model, {both: value, top(refined): 1.0 - value})


def model_m4(ann: TileAnnotation, frame: Frame,
             weights: CertaintyWeights | None = None) -> MassFunction:
    """Two-class annotation model on the hyper-power set.

    Like the exclusive model but without renaming: a two-class statement puts
    mass directly on the conjunction of the classes.
    """
    weights = weights or CertaintyWeights()
    _check_two_class(ann, frame)
    model = free_model(frame)
    classes = ann.classes()
    if len(classes) == 1:
        c = _single_class_certainty(ann, weights)
        return make_bba(model, {atom(frame, frame.index(classes[0])): c,
                                top(frame): 1.0 - c})
    value = _proportion_certainty_total(ann, weights)
    conjunction = atom(frame, 0) & atom(frame, 1)
    return make_bba(model, {conjunction: value, top(frame): 1.0 - value})


def _single_class_certainty(ann: TileAnnotation, weights: CertaintyWeights) -> float:
    # one plain statement keeps its certainty; split statements about the
    # same class (different certainty levels) weight it by proportion
    if len(ann.entries) == 1:
        return weights.resolve(ann.entries[0].certainty)
    return _proportion_certainty_total(ann, weights)


def _proportion_certainty_total(ann: TileAnnotation, weights: CertaintyWeights) -> float:
    total = 0.0
    for e in ann.entries:
        total += e.proportion * weights.resolve(e.certainty)
    if total > 1.0 + PROPORTION_TOLERANCE:
        raise ValidationError("certainty-weighted proportions sum to more than 1")
    return min(total, 1.0)


def model_m5(ann: TileAnnotation, model: ConstraintModel,
             weights: CertaintyWeights | None = None) -> MassFunction:
    """Proportion-weighted single mass function over the stated classes.

    Each class receives the sum of proportion times certainty over its
    entries; the remainder goes to the full ignorance.  Valid under any
    constraint model since only singletons and the ignorance are focal.
    """
    weights = weights or CertaintyWeights()
    frame = model.frame
    masses: dict = {}
    total = 0.0
    for e in ann.entries:
        value = e.proportion * weights.resolve(e.certainty)
        if value == 0.0:
            continue
        element = atom(frame, frame.index(e.class_name))
        masses[element] = masses.get(element, 0.0) + value
        total += value
    if total > 1.0 + PROPORTION_TOLERANCE:
        raise ValidationError("certainty-weighted proportions sum to more than 1")
    masses[top(frame)] = max(0.0, 1.0 - total) + masses.get(top(frame), 0.0)
    return make_bba(model, masses)


def model_m5_generalized(ann: TileAnnotation, weights: CertaintyWeights,
                         model: ConstraintModel) -> MassFunction:
    """Multi-class, multi-certainty-level form of the proportion model.

    Entries carry certainty levels; the same class may appear once per level
    and the contributions add up before the ignorance remainder is taken.
    """
    return model_m5(ann, model, weights)


# ---------------------------------------------------------------------------
# Classifier-output calibration
# ---------------------------------------------------------------------------

@dataclass
class ClassifierCalibrator:
    """Streaming calibration of one classifier's score vectors into BBAs.

    The two highest scores are kept and scaled by an adaptive factor chasing
    a target mean belief on targets (0.8 by default), computed from running
    means over all previously processed signals; the factor starts at 1.  The
    ignorance mass is floored (0.001 by default): when the scaled targets
    would exceed the budget, the strongest target absorbs the correction and
    the weaker one is clipped so the output stays a valid mass function.

    The stream order matters; process signals in a reproducible order.
    """

    classifier_id: str
    model: ConstraintModel
    belief_target: float = 0.8
    ignorance_floor: float = 0.001
    _signals: int = field(default=0, repr=False)
    _o_sum: float = field(default=0.0, repr=False)
    _b_sum: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.belief_target < 1.0:
            raise ValidationError("belief target must lie in (0, 1)")
        if not 0.0 < self.ignorance_floor < 0.5:
            raise ValidationError("ignorance floor must lie in (0, 0.5)")

    @property
    def factor(self) -> float:
        """Adaptive scale from the running means of raw and scaled scores."""
        if self._signals == 0 or self._o_sum <= 0.0 or self._b_sum <= 0.0:
            return 1.0
        mean_o = self._o_sum / self._signals
        mean_b = self._b_sum / self._signals
        return (self.belief_target / mean_o) * (self.belief_target / mean_b)

    def process(self, scores: Sequence[float]) -> MassFunction:
        frame = self.model.frame
        if len(scores) != frame.n:
            raise ValidationError(f"expected {frame.n} scores, got {len(scores)}")
        for s in scores:
            if not 0.0 <= s <= 1.0:
                raise ValidationError(f"score {s} outside [0, 1]")
        if max(scores) <= 0.0:
            raise ValidationError("all classifier scores are zero")

        order = sorted(range(frame.n), key=lambda i: (-scores[i], i))
        first, second = order[0], order[1]
        f = self.factor
        b1 = f * scores[first]
        b2 = f * scores[second]

        self._signals += 1
        self._o_sum += scores[first] + scores[second]
        self._b_sum += b1 + b2

        theta_mass = 1.0 - b1 - b2
        if theta_mass < self.ignorance_floor:
            theta_mass = self.ignorance_floor
            budget = 1.0 - self.ignorance_floor
            b2 = min(b2, budget / 2.0)  # the strongest target stays strongest
            b1 = budget - b2
        masses = {atom(frame, first): b1, top(frame): theta_mass}
        if b2 > 0.0:
            masses[atom(frame, second)] = b2
        return make_bba(self.model, masses)


# ---------------------------------------------------------------------------
# Delimited-text ingestion: one header row, comma separated.
# ---------------------------------------------------------------------------

def write_annotations(path: str | Path,
                      records: Iterable[tuple[str, TileAnnotation]]) -> None:
    """Write (tile id, annotation) records as tile/expert/class rows."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tile", "expert", "class", "proportion", "certainty"])
        for tile_id, ann in records:
            for e in ann.entries:
                writer.writerow([tile_id, ann.expert_id, e.class_name,
                                 f"{e.proportion:.12g}", e.certainty])


def read_annotations(path: str | Path) -> dict[tuple[str, str], TileAnnotation]:
    """Read annotations back as a map keyed by (tile id, expert id)."""
    grouped: dict[tuple[str, str], list[AnnotationEntry]] = {}
    order: list[tuple[str, str]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["tile", "expert"]:
            raise ParseError(f"{path}: expected header starting with 'tile,expert'")
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 5:
                raise ParseError(f"{path}: bad annotation row {row!r}")
            tile_id, expert_id, class_name, proportion, certainty = (c.strip() for c in row)
            try:
                p = float(proportion)
            except ValueError:
                raise ParseError(f"{path}: bad proportion {proportion!r}") from None
            cert: float | str = certainty
            if certainty not in CERTAINTY_LEVELS:
                try:
                    cert = float(certainty)
                except ValueError:
                    raise ParseError(f"{path}: bad certainty {certainty!r}") from None
            key = (tile_id, expert_id)
            if key not in grouped:
                grouped[key] = []
                order.append(key)
            grouped[key].append(AnnotationEntry(class_name, p, cert))
    if not grouped:
        raise ParseError(f"{path}: no annotation rows")
    return {key: TileAnnotation(key[1], tuple(grouped[key])) for key in order}


def write_scores(path: str | Path, classes: Sequence[str],
                 records: Iterable[tuple[str, str, Sequence[float]]]) -> None:
    """Write (signal id, classifier id, score vector) records."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["signal", "classifier", *classes])
        for signal_id, classifier_id, scores in records:
            writer.writerow([signal_id, classifier_id,
                             *(f"{s:.12g}" for s in scores)])


def read_scores(path: str | Path) -> tuple[tuple[str, ...], dict[tuple[str, str], tuple[float, ...]]]:
    """Read score records; returns the class names and a keyed score map."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) < 3 or [h.strip() for h in header[:2]] != ["signal", "classifier"]:
            raise ParseError(f"{path}: expected header 'signal,classifier,<classes...>'")
        classes = tuple(h.strip() for h in header[2:])
        records: dict[tuple[str, str], tuple[float, ...]] = {}
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 2 + len(classes):
                raise ParseError(f"{path}: bad score row {row!r}")
            try:
                scores = tuple(float(c) for c in row[2:])
            except ValueError:
                raise ParseError(f"{path}: non-numeric score in {row!r}") from None
            records[(row[0].strip(), row[1].strip())] = scores
    if not records:
        raise ParseError(f"{path}: no score rows")
    return classes, records


def write_truth(path: str | Path, truth: Iterable[tuple[str, str]]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["instance", "label"])
        for instance_id, label in truth:
            writer.writerow([instance_id, label])


def read_truth(path: str | Path) -> dict[str, str]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["instance", "label"]:
            raise ParseError(f"{path}: expected header 'instance,label'")
        truth = {}
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: bad truth row {row!r}")
            truth[row[0].strip()] = row[1].strip()
    if not truth:
        raise ParseError(f"{path}: no truth rows")
    return truth
