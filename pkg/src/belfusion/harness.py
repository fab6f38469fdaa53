"""Experiment engine: synthetic panels, multi-rule runs, divergence and accuracy.

An experiment fuses every instance of a dataset with every configured rule,
records the decisions, and aggregates conflict statistics, the pairwise
decision-divergence matrix, and (when ground truth is available) per-rule
good-classification rates with confidence intervals estimated over repeated
train/test re-splits.  Everything is driven by one seed: rerunning a
configuration reproduces the report byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bba import MassFunction, auto_conflict, total_conflict
from .decision import DecisionPolicy, decide, parse_policy
from .errors import ParseError, ValidationError
from .expertmodels import (
    CERTAINTY_LEVELS,
    CertaintyWeights,
    AnnotationEntry,
    ClassifierCalibrator,
    TileAnnotation,
    model_m5_generalized,
    read_annotations,
    read_scores,
    read_truth,
)
from .frame import ConstraintModel, atom, make_frame, parse_model_spec
from .rules import RuleSpec, combine_all, parse_rule_spec

__all__ = [
    "SyntheticSpec",
    "AnnotationPanel",
    "ScorePanel",
    "ExperimentConfig",
    "FusionReport",
    "generate_synthetic_panel",
    "divergence_matrix",
    "accuracy_with_ci",
    "run_experiment",
]


# ---------------------------------------------------------------------------
# Panels and their synthesis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnotationPanel:
    """Expert annotations for a set of tiles, with optional ground truth."""

    classes: tuple[str, ...]
    tiles: tuple[str, ...]
    experts: tuple[str, ...]
    annotations: dict[tuple[str, str], TileAnnotation]
    truth: dict[str, str] | None = None


@dataclass(frozen=True)
class ScorePanel:
    """Classifier score vectors for a set of signals, with optional truth."""

    classes: tuple[str, ...]
    signals: tuple[str, ...]
    classifiers: tuple[str, ...]
    scores: dict[tuple[str, str], tuple[float, ...]]
    truth: dict[str, str] | None = None


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic panel generators.

    ``experts`` panels draw a true class per tile and let each source state
    it (or a wrong one, at the disagreement rate), sometimes as a two-class
    tile, with certainty levels drawn from ``certainty_dist``.  ``classifiers``
    panels emit full score vectors with a per-source error rate and a
    per-source spread controlling how close the runner-up score comes to the
    winner.
    """

    kind: str
    classes: tuple[str, ...]
    sources: int
    instances: int
    disagreement: float = 0.2
    multiclass_rate: float = 0.1
    certainty_dist: tuple[float, float, float] = (0.5, 0.3, 0.2)
    error_rates: tuple[float, ...] | None = None
    spreads: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("experts", "classifiers"):
            raise ValidationError(f"unknown panel kind {self.kind!r}")
        if len(self.classes) < 2:
            raise ValidationError("synthetic panels need at least two classes")
        if self.sources < 2:
            raise ValidationError("synthetic panels need at least two sources")
        if self.instances < 1:
            raise ValidationError("synthetic panels need at least one instance")
        if not 0.0 <= self.disagreement <= 1.0:
            raise ValidationError("disagreement rate outside [0, 1]")
        if not 0.0 <= self.multiclass_rate <= 1.0:
            raise ValidationError("multi-class rate outside [0, 1]")
        if len(self.certainty_dist) != len(CERTAINTY_LEVELS) or \
                any(p < 0 for p in self.certainty_dist) or \
                abs(sum(self.certainty_dist) - 1.0) > 1e-9:
            raise ValidationError("certainty distribution must be 3 probabilities summing to 1")
        for name, values, lo, hi in (("error rate", self.error_rates, 0.0, 1.0),
                                     ("spread", self.spreads, 0.0, 1.0)):
            if values is not None:
                if len(values) != self.sources:
                    raise ValidationError(f"need one {name} per source")
                if any(not lo <= v < hi for v in values):
                    raise ValidationError(f"{name} outside [{lo}, {hi})")

    @staticmethod
    def from_dict(data: dict) -> "SyntheticSpec":
        data = dict(data)
        classes = data.get("classes")
        if isinstance(classes, int):
            data["classes"] = tuple(f"c{i}" for i in range(classes))
        elif classes is not None:
            data["classes"] = tuple(classes)
        for key in ("certainty_dist", "error_rates", "spreads"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        allowed = {f.name for f in SyntheticSpec.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - allowed
        if unknown:
            raise ValidationError(f"unknown synthetic panel fields: {sorted(unknown)}")
        try:
            return SyntheticSpec(**data)
        except TypeError as exc:
            raise ValidationError(f"bad synthetic panel spec: {exc}") from None


def generate_synthetic_panel(spec: SyntheticSpec, seed: int) -> AnnotationPanel | ScorePanel:
    """Draw a reproducible panel with ground truth from ``spec`` and ``seed``."""
    rng = np.random.default_rng(seed)
    n = len(spec.classes)
    if spec.kind == "experts":
        experts = tuple(f"expert{j + 1}" for j in range(spec.sources))
        tiles = tuple(f"t{i:05d}" for i in range(spec.instances))
        truth: dict[str, str] = {}
        annotations: dict[tuple[str, str], TileAnnotation] = {}
        for tile in tiles:
            true_class = spec.classes[rng.integers(n)]
            truth[tile] = true_class
            for expert in experts:
                primary = true_class
                if rng.random() < spec.disagreement:
                    primary = spec.classes[_other_index(rng, n, spec.classes.index(true_class))]
                entries: list[AnnotationEntry] = []
                if rng.random() < spec.multiclass_rate:
                    secondary = spec.classes[_other_index(rng, n, spec.classes.index(primary))]
                    p1 = float(rng.uniform(0.55, 0.9))
                    entries.append(AnnotationEntry(primary, p1, _draw_level(rng, spec.certainty_dist)))
                    entries.append(AnnotationEntry(secondary, 1.0 - p1, _draw_level(rng, spec.certainty_dist)))
                else:
                    entries.append(AnnotationEntry(primary, 1.0, _draw_level(rng, spec.certainty_dist)))
                annotations[(tile, expert)] = TileAnnotation(expert, tuple(entries))
        return AnnotationPanel(spec.classes, tiles, experts, annotations, truth)

    error_rates = spec.error_rates or tuple(
        0.10 + 0.06 * (j % 3) for j in range(spec.sources))
    spreads = spec.spreads or tuple(
        (0.25, 0.70, 0.50)[j % 3] for j in range(spec.sources))
    classifiers = tuple(f"clf{j + 1}" for j in range(spec.sources))
    signals = tuple(f"s{i:05d}" for i in range(spec.instances))
    truth = {}
    scores: dict[tuple[str, str], tuple[float, ...]] = {}
    for signal in signals:
        true_index = int(rng.integers(n))
        truth[signal] = spec.classes[true_index]
        for j, classifier in enumerate(classifiers):
            winner = true_index
            if rng.random() < error_rates[j]:
                winner = _other_index(rng, n, true_index)
            if winner != true_index and rng.random() < 0.5:
                second = true_index
            else:
                second = _other_index(rng, n, winner)
            s_win = float(rng.uniform(0.55, 1.0))
            s_second = s_win * float(rng.uniform(0.2, 0.2 + 0.8 * spreads[j]))
            vector = rng.uniform(0.0, 0.05 * s_win, size=n)
            vector[winner] = s_win
            vector[second] = s_second
            scores[(signal, classifier)] = tuple(float(v) for v in vector)
    return ScorePanel(spec.classes, signals, classifiers, scores, truth)


def _other_index(rng: np.random.Generator, n: int, avoid: int) -> int:
    step = 1 + int(rng.integers(n - 1))
    return (avoid + step) % n


def _draw_level(rng: np.random.Generator, dist: tuple[float, float, float]) -> str:
    return CERTAINTY_LEVELS[int(rng.choice(len(CERTAINTY_LEVELS), p=dist))]


# ---------------------------------------------------------------------------
# Aggregate statistics
# ---------------------------------------------------------------------------

def divergence_matrix(decision_vectors: Sequence[Sequence[object]]) -> list[list[float]]:
    """Percentage of instances on which each pair of rules decides differently."""
    if not decision_vectors:
        raise ValidationError("no decision vectors")
    length = len(decision_vectors[0])
    if length == 0:
        raise ValidationError("empty decision vectors")
    for vec in decision_vectors:
        if len(vec) != length:
            raise ValidationError("decision vectors have different lengths")
    r = len(decision_vectors)
    matrix = [[0.0] * r for _ in range(r)]
    for i in range(r):
        for j in range(i + 1, r):
            differing = sum(1 for a, b in zip(decision_vectors[i], decision_vectors[j]) if a != b)
            value = 100.0 * differing / length
            matrix[i][j] = value
            matrix[j][i] = value
    return matrix


def accuracy_with_ci(decisions: Sequence[object], truth: Sequence[object], trials: int,
                     *, test_fraction: float = 1.0 / 3.0, seed: int = 0,
                     ) -> tuple[float, tuple[float, float]]:
    """Good-classification rate (%) and its 95% interval over re-splits.

    Each trial scores a fresh random test subset of the instances; the
    interval is the normal approximation ``mean +/- 1.96 * sem`` over the
    trial means.  With a single trial or identical trial means the interval
    degenerates to the mean.
    """
    if len(decisions) != len(truth):
        raise ValidationError("decisions and truth have different lengths")
    if len(decisions) == 0:
        raise ValidationError("no decisions to score")
    if trials < 1:
        raise ValidationError("need at least one trial")
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test fraction must lie in (0, 1)")
    correct = np.array([d == t for d, t in zip(decisions, truth)], dtype=float)
    rng = np.random.default_rng(seed)
    size = max(1, round(len(correct) * test_fraction))
    means = np.empty(trials)
    for t in range(trials):
        subset = rng.permutation(len(correct))[:size]
        means[t] = correct[subset].mean()
    rate = 100.0 * float(means.mean())
    if trials == 1:
        return rate, (rate, rate)
    sem = float(means.std(ddof=1)) / np.sqrt(trials)
    half = 100.0 * 1.96 * sem
    return rate, (rate - half, rate + half)


# ---------------------------------------------------------------------------
# Experiment configuration and report
# ---------------------------------------------------------------------------

_EXPERT_MODELS = ("m5", "m5_generalized")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run one experiment deterministically."""

    classes: tuple[str, ...]
    rules: tuple[str, ...]
    dataset: dict
    model: str = "shafer"
    expert_model: str = "m5_generalized"
    decision: str = "betp:singletons"
    trials: int = 1
    split: float = 2.0 / 3.0
    reshuffle_calibration: bool = False
    seed: int = 0
    certainty_weights: tuple[float, float, float] = (2.0 / 3.0, 0.5, 1.0 / 3.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "certainty_weights", tuple(self.certainty_weights))
        if not self.rules:
            raise ValidationError("experiment needs at least one rule")
        if self.trials < 1:
            raise ValidationError("trial count must be >= 1")
        if not 0.0 < self.split < 1.0:
            raise ValidationError("train/test split ratio must lie in (0, 1)")
        if self.expert_model not in _EXPERT_MODELS:
            raise ValidationError(f"unknown expert model {self.expert_model!r}")
        if not isinstance(self.dataset, dict) or "kind" not in self.dataset:
            raise ValidationError("dataset spec must be a mapping with a 'kind'")

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        data = dict(data)
        classes = data.get("classes")
        if isinstance(classes, int):
            data["classes"] = tuple(f"c{i}" for i in range(classes))
        allowed = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - allowed
        if unknown:
            raise ValidationError(f"unknown experiment config fields: {sorted(unknown)}")
        try:
            return ExperimentConfig(**data)
        except TypeError as exc:
            raise ValidationError(f"bad experiment config: {exc}") from None

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad experiment config JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ParseError("experiment config JSON must be an object")
        return ExperimentConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FusionReport:
    """Per-instance fusion results plus the aggregate tables."""

    config: dict
    classes: tuple[str, ...]
    model_label: str
    rule_labels: tuple[str, ...]
    policy_label: str
    sources: tuple[str, ...]
    instance_ids: tuple[str, ...]
    fused: list[dict[str, list[tuple[str, float]]]]
    decisions: dict[str, list[str]]
    conflicts: list[float]
    mean_conflict: float
    auto_conflicts: dict[str, float]
    divergence: list[list[float]]
    accuracy: dict[str, tuple[float, float, float]] | None
    metadata: dict = field(default_factory=dict)


def _rules_and_policy(config: ExperimentConfig) -> tuple[list[RuleSpec], DecisionPolicy]:
    specs = [parse_rule_spec(r) for r in config.rules]
    return specs, parse_policy(config.decision)


def _load_panel(config: ExperimentConfig) -> AnnotationPanel | ScorePanel:
    spec = dict(config.dataset)
    kind = spec.pop("kind")
    if kind == "synthetic":
        seed = spec.pop("seed", config.seed)
        spec.setdefault("classes", config.classes)
        if "panel" in spec:
            spec["kind"] = spec.pop("panel")
        synthetic = SyntheticSpec.from_dict(spec)
        if tuple(synthetic.classes) != tuple(config.classes):
            raise ValidationError("synthetic panel classes differ from the experiment classes")
        return generate_synthetic_panel(synthetic, seed)
    if kind == "annotations":
        annotations = read_annotations(spec["path"])
        truth = read_truth(spec["truth"]) if spec.get("truth") else None
        tiles = tuple(dict.fromkeys(t for t, _ in annotations))
        experts = tuple(dict.fromkeys(e for _, e in annotations))
        for tile in tiles:
            for expert in experts:
                if (tile, expert) not in annotations:
                    raise ValidationError(f"missing annotation for tile {tile!r}, expert {expert!r}")
        return AnnotationPanel(tuple(config.classes), tiles, experts, annotations, truth)
    if kind == "scores":
        classes, records = read_scores(spec["path"])
        if tuple(classes) != tuple(config.classes):
            raise ValidationError("score file classes differ from the experiment classes")
        truth = read_truth(spec["truth"]) if spec.get("truth") else None
        signals = tuple(dict.fromkeys(s for s, _ in records))
        classifiers = tuple(dict.fromkeys(c for _, c in records))
        for signal in signals:
            for classifier in classifiers:
                if (signal, classifier) not in records:
                    raise ValidationError(f"missing scores for signal {signal!r}, classifier {classifier!r}")
        return ScorePanel(tuple(classes), signals, classifiers, records, truth)
    raise ValidationError(f"unknown dataset kind {kind!r}")


def _annotation_bbas(panel: AnnotationPanel, model: ConstraintModel,
                     weights: CertaintyWeights) -> list[list[MassFunction]]:
    return [
        [model_m5_generalized(panel.annotations[(tile, expert)], weights, model)
         for expert in panel.experts]
        for tile in panel.tiles
    ]


def _score_bbas(panel: ScorePanel, model: ConstraintModel,
                signal_order: Sequence[str]) -> list[list[MassFunction]]:
    calibrators = {c: ClassifierCalibrator(c, model) for c in panel.classifiers}
    per_signal = {}
    for signal in signal_order:
        per_signal[signal] = [calibrators[c].process(panel.scores[(signal, c)])
                              for c in panel.classifiers]
    return [per_signal[s] for s in panel.signals]


def run_experiment(config: ExperimentConfig) -> FusionReport:
    """Fuse every instance with every rule and aggregate the statistics."""
    frame = make_frame(config.classes)
    model = parse_model_spec(frame, config.model)
    specs, policy = _rules_and_policy(config)
    weights = CertaintyWeights(*config.certainty_weights)
    panel = _load_panel(config)

    if isinstance(panel, AnnotationPanel):
        instance_ids = panel.tiles
        sources = panel.experts
        instances = _annotation_bbas(panel, model, weights)
    else:
        instance_ids = panel.signals
        sources = panel.classifiers
        instances = _score_bbas(panel, model, panel.signals)
    if not instance_ids:
        raise ValidationError("dataset is empty")

    labels = tuple(s.label for s in specs)
    fused: list[dict[str, list[tuple[str, float]]]] = []
    decisions: dict[str, list[str]] = {label: [] for label in labels}
    decision_elements: dict[str, list] = {label: [] for label in labels}
    conflicts: list[float] = []
    auto_sums: dict[str, float] = {s: 0.0 for s in sources}
    order = len(sources)

    for bbas in instances:
        results = combine_all(bbas, specs)
        fused.append({
            label: [(e.expression, mass) for e, mass in results[label].items()]
            for label in labels
        })
        for label in labels:
            element = decide(results[label], policy)
            decision_elements[label].append(element)
            decisions[label].append(element.expression)
        conflicts.append(total_conflict(bbas))
        for source, bba in zip(sources, bbas):
            auto_sums[source] += auto_conflict(bba, order)

    mean_conflict = sum(conflicts) / len(conflicts)
    auto_conflicts = {s: auto_sums[s] / len(instances) for s in sources}
    divergence = divergence_matrix([decisions[label] for label in labels])

    accuracy = None
    truth_map = panel.truth
    if truth_map is not None:
        missing = [i for i in instance_ids if i not in truth_map]
        if missing:
            raise ValidationError(f"ground truth missing for {len(missing)} instances")
        truth_elements = [atom(frame, frame.index(truth_map[i])) for i in instance_ids]
        accuracy = {}
        if config.reshuffle_calibration and isinstance(panel, ScorePanel) and config.trials > 1:
            accuracy = _reshuffled_accuracy(panel, model, specs, policy, config, truth_elements)
        else:
            for label in labels:
                rate, (lo, hi) = accuracy_with_ci(
                    decision_elements[label], truth_elements, config.trials,
                    test_fraction=1.0 - config.split, seed=config.seed)
                accuracy[label] = (rate, lo, hi)

    metadata = {
        "instances": len(instance_ids),
        "sources": len(sources),
        "seed": config.seed,
        "trials": config.trials,
        "train_fraction": config.split,
        "auto_conflict_order": order,
        "ci_method": "95% normal approximation over trial means (1.96 * sem)",
        "reshuffle_calibration": config.reshuffle_calibration,
    }
    return FusionReport(
        config=config.to_dict(),
        classes=tuple(config.classes),
        model_label=model.label,
        rule_labels=labels,
        policy_label=policy.label,
        sources=tuple(sources),
        instance_ids=tuple(instance_ids),
        fused=fused,
        decisions=decisions,
        conflicts=conflicts,
        mean_conflict=mean_conflict,
        auto_conflicts=auto_conflicts,
        divergence=divergence,
        accuracy=accuracy,
        metadata=metadata,
    )


def _reshuffled_accuracy(panel: ScorePanel, model: ConstraintModel,
                         specs: list[RuleSpec], policy: DecisionPolicy,
                         config: ExperimentConfig, truth_elements: list,
                         ) -> dict[str, tuple[float, float, float]]:
    """Accuracy over trials that re-randomize the calibration stream order."""
    labels = [s.label for s in specs]
    rng = np.random.default_rng(config.seed)
    n = len(panel.signals)
    size = max(1, round(n * (1.0 - config.split)))
    means = {label: np.empty(config.trials) for label in labels}
    for t in range(config.trials):
        stream = [panel.signals[i] for i in rng.permutation(n)]
        instances = _score_bbas(panel, model, stream)
        subset = rng.permutation(n)[:size]
        correct = {label: [] for label in labels}
        for idx in subset:
            results = combine_all(instances[idx], specs)
            for label in labels:
                correct[label].append(decide(results[label], policy) == truth_elements[idx])
        for label in labels:
            means[label][t] = float(np.mean(correct[label]))
    accuracy = {}
    for label in labels:
        rate = 100.0 * float(means[label].mean())
        sem = float(means[label].std(ddof=1)) / np.sqrt(config.trials)
        half = 100.0 * 1.96 * sem
        accuracy[label] = (rate, rate - half, rate + half)
    return accuracy
