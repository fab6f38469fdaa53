"""Command-line interface.

Subcommands:

* ``fuse``       -- combine the sources of one BBA file and print per-rule
  masses with a decision-functional table.
* ``experiment`` -- run a configured experiment and write its report
  (tables, record dump, figures) to a directory.
* ``generate``   -- draw a synthetic annotation or classifier panel.
* ``lattice``    -- print the propositions generated by a frame.

Exit codes: 0 success, 2 validation error, 3 parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bba import parse_bba_blocks, total_conflict
from .decision import decide, parse_policy
from .errors import FusionError, ParseError, ValidationError
from .frame import (
    dsm_cardinality,
    enumerate_dsm_lattice,
    make_frame,
    parse_model_spec,
)
from .harness import (
    ExperimentConfig,
    SyntheticSpec,
    generate_synthetic_panel,
    run_experiment,
)
from .expertmodels import write_annotations, write_scores, write_truth
from .report import render_functional_table, render_records, render_summary, write_report
from .rules import combine_all, parse_rule_list

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARSE = 3


def _frame_argument(text: str):
    names = [n.strip() for n in text.split(",") if n.strip()]
    return make_frame(names)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="belfusion",
        description="Belief-function fusion: combination rules, decisions, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fuse = sub.add_parser("fuse", help="combine the sources of one BBA file")
    fuse.add_argument("bba_file", help="BBA file: 'element<TAB>mass' rows, blank-line separated sources")
    fuse.add_argument("--frame", required=True, help="comma-separated class names, e.g. rock,sand")
    fuse.add_argument("--model", default="free", help="free | shafer | hybrid:<expr>,... (default free)")
    fuse.add_argument("--under", default=None,
                      help="optional combination model refining --model (e.g. shafer)")
    fuse.add_argument("--rules", default="conj,dp,pcr6", help="comma-separated rule list")
    fuse.add_argument("--decision", default="betp:singletons", help="decision policy, e.g. maxmass:all")
    fuse.add_argument("--format", choices=("text", "records"), default="text")

    experiment = sub.add_parser("experiment", help="run a configured experiment")
    experiment.add_argument("--config", required=True, help="experiment config JSON file")
    experiment.add_argument("--out", required=True, help="output directory for the report")
    experiment.add_argument("--seed", type=int, default=None, help="override the config seed")
    experiment.add_argument("--format", choices=("text", "records"), default="text",
                            help="what to print on stdout")
    experiment.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    generate = sub.add_parser("generate", help="draw a synthetic panel with ground truth")
    generate.add_argument("--kind", choices=("experts", "classifiers"), required=True)
    generate.add_argument("--classes", required=True,
                          help="class count or comma-separated names")
    generate.add_argument("--sources", type=int, default=3)
    generate.add_argument("--instances", type=int, default=100)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--disagreement", type=float, default=0.2)
    generate.add_argument("--multiclass-rate", type=float, default=0.1)
    generate.add_argument("--out", required=True, help="output directory")

    lattice = sub.add_parser("lattice", help="print the propositions of a frame")
    lattice.add_argument("--frame", required=True, help="comma-separated class names")
    lattice.add_argument("--model", default="free", help="free | shafer | hybrid:<expr>,...")
    lattice.add_argument("--format", choices=("text", "records"), default="text")

    return parser


def _cmd_fuse(args: argparse.Namespace) -> int:
    frame = _frame_argument(args.frame)
    model = parse_model_spec(frame, args.model)
    under = parse_model_spec(frame, args.under) if args.under else None
    specs = parse_rule_list(args.rules)
    policy = parse_policy(args.decision)
    text = Path(args.bba_file).read_text()
    bbas = parse_bba_blocks(model, text)
    if len(bbas) < 2:
        raise ValidationError("fuse needs at least two sources in the BBA file")
    results = combine_all(bbas, specs, under)
    conflict = total_conflict(bbas, under)

    if args.format == "records":
        payload = {
            "total_conflict": conflict,
            "rules": {
                label: {
                    "masses": [[e.expression, mass] for e, mass in fused.items()],
                    "decision": decide(fused, policy).expression,
                }
                for label, fused in results.items()
            },
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return EXIT_OK

    print(f"total conflict\t{conflict:.4f}")
    for spec in specs:
        fused = results[spec.label]
        print(f"\n== rule {spec.label} ==")
        print(render_functional_table(fused), end="")
        print(f"decision ({policy.label})\t{decide(fused, policy).expression}")
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        data = config.to_dict()
        data["seed"] = args.seed
        config = ExperimentConfig.from_dict(data)
    report = run_experiment(config)
    written = write_report(report, args.out, figures=not args.no_figures)
    if args.format == "records":
        print(render_records(report), end="")
    else:
        print(render_summary(report), end="")
        for path in written:
            print(f"wrote\t{path}")
    return EXIT_OK


def _cmd_generate(args: argparse.Namespace) -> int:
    classes: object
    body = args.classes.strip()
    classes = int(body) if body.isdigit() else [n.strip() for n in body.split(",") if n.strip()]
    spec = SyntheticSpec.from_dict({
        "kind": args.kind,
        "classes": classes,
        "sources": args.sources,
        "instances": args.instances,
        "disagreement": args.disagreement,
        "multiclass_rate": args.multiclass_rate,
    })
    panel = generate_synthetic_panel(spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "experts":
        records = [(tile, panel.annotations[(tile, expert)])
                   for tile in panel.tiles for expert in panel.experts]
        write_annotations(out / "annotations.csv", records)
        data_key, data_path = "annotations", out / "annotations.csv"
    else:
        rows = [(signal, classifier, panel.scores[(signal, classifier)])
                for signal in panel.signals for classifier in panel.classifiers]
        write_scores(out / "scores.csv", panel.classes, rows)
        data_key, data_path = "scores", out / "scores.csv"
    write_truth(out / "truth.csv", [(i, panel.truth[i]) for i in
                                    (panel.tiles if args.kind == "experts" else panel.signals)])
    config = {
        "classes": list(panel.classes),
        "model": "shafer",
        "rules": ["conj", "dp", "pcr6"],
        "decision": "betp:singletons",
        "trials": 100,
        "split": 2.0 / 3.0,
        "seed": args.seed,
        "dataset": {"kind": data_key, "path": str(data_path), "truth": str(out / "truth.csv")},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    print(f"wrote\t{data_path}")
    print(f"wrote\t{out / 'truth.csv'}")
    print(f"wrote\t{out / 'config.json'}")
    return EXIT_OK


def _cmd_lattice(args: argparse.Namespace) -> int:
    frame = _frame_argument(args.frame)
    model = parse_model_spec(frame, args.model)
    elements = enumerate_dsm_lattice(frame)
    if args.format == "records":
        payload = [
            {
                "index": i,
                "expression": e.expression,
                "regions": e.bits.bit_count(),
                "cardinality": dsm_cardinality(e, model),
                "empty_under_model": model.is_empty(e),
            }
            for i, e in enumerate(elements)
        ]
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print("index\telement\tregions\tcardinality\tempty")
    for i, e in enumerate(elements):
        print(f"{i}\t{e.expression}\t{e.bits.bit_count()}\t"
              f"{dsm_cardinality(e, model)}\t{'yes' if model.is_empty(e) else 'no'}")
    return EXIT_OK


_COMMANDS = {
    "fuse": _cmd_fuse,
    "experiment": _cmd_experiment,
    "generate": _cmd_generate,
    "lattice": _cmd_lattice,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, FusionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
