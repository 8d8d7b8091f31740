"""Command-line entry point.

Subcommands:
  run      execute a scenario over one seed or a seed range
  compare  run a scenario in both baseline and mitigated modes and diff metrics
  vectors  dump deterministic test vectors for the cryptographic core

Exit codes: 0 success, 2 scenario validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .metrics import summarize
from .runner import run_scenario
from .scenario import Scenario, ScenarioError, load_scenario
from .vectors import dump_vectors

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def parse_seeds(text: str) -> list[int]:
    """Accepts "7" or an inclusive range "1..20"."""
    if ".." in text:
        lo, _, hi = text.partition("..")
        seeds = list(range(int(lo), int(hi) + 1))
    else:
        seeds = [int(text)]
    if not seeds:
        raise ValueError(f"empty seed range: {text!r}")
    return seeds


def _load(path: str) -> Scenario:
    if not Path(path).is_file():
        print(f"error: scenario file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        print("scenario validation failed:", file=sys.stderr)
        for err in exc.errors:
            print(f"  - {err}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _write(path: Path, content: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    seeds = parse_seeds(args.seed)
    out_root = Path(args.out)
    for seed in seeds:
        result = run_scenario(scenario, seed, mode_override=args.mode)
        run_dir = out_root / f"{scenario.name}-s{seed}"
        normalized = scenario.normalized()
        normalized["config"]["mode"] = result.mode
        _write(run_dir / "scenario.normalized.yaml",
               _as_yaml(normalized))
        _write(run_dir / "trace.jsonl", result.trace_text())
        _write(run_dir / "summary.json", result.summary.to_json())
        if args.verbose:
            m = result.summary
            print(f"{scenario.name} seed={seed} mode={result.mode} "
                  f"reg={m.registrations} handovers={m.handovers}")
    print(f"wrote {len(seeds)} run(s) under {out_root}")
    return EXIT_OK


def _as_yaml(doc: dict) -> str:
    import yaml
    return yaml.safe_dump(doc, sort_keys=True)


def _rate(count: int, total: int) -> float:
    return count / total if total else 0.0


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load(args.scenario)
    seeds = parse_seeds(args.seeds)
    per_mode: dict[str, dict] = {}
    for mode in ("baseline", "tss"):
        agg = {"runs": 0, "report_triggered": 0, "handover_initiated": 0,
               "handovers_completed": 0, "registrations_succeeded": 0,
               "pages_missed": 0, "tss_rejections": 0}
        for seed in seeds:
            result = run_scenario(scenario, seed, mode_override=mode)
            m = result.summary
            agg["runs"] += 1
            agg["handovers_completed"] += m.handovers["completed"]
            agg["registrations_succeeded"] += m.registrations["succeeded"]
            for attack in m.attacks:
                if attack["mode"] == "fake_bs_handover":
                    agg["report_triggered"] += int(attack["report_triggered"])
                    agg["handover_initiated"] += int(attack["handover_initiated"])
                    agg["pages_missed"] += attack["pages_missed"]
                    agg["tss_rejections"] += attack["tss_rejections"]
        per_mode[mode] = agg

    runs = per_mode["baseline"]["runs"]
    report = {
        "scenario": scenario.name,
        "seeds": [seeds[0], seeds[-1]],
        "metrics": {
            "report_triggered_rate": {
                mode: _rate(per_mode[mode]["report_triggered"], runs)
                for mode in per_mode},
            "handover_initiated_rate": {
                mode: _rate(per_mode[mode]["handover_initiated"], runs)
                for mode in per_mode},
            "pages_missed_total": {
                mode: per_mode[mode]["pages_missed"] for mode in per_mode},
            "handovers_completed_total": {
                mode: per_mode[mode]["handovers_completed"] for mode in per_mode},
            "registrations_succeeded_total": {
                mode: per_mode[mode]["registrations_succeeded"]
                for mode in per_mode},
            "tss_rejections_total": {
                mode: per_mode[mode]["tss_rejections"] for mode in per_mode},
        },
    }
    modes = {a.mode for a in scenario.attackers}
    if not scenario.attackers:
        report["note"] = "scenario has no attackers; both modes exercise the honest paths"
    elif "fake_bs_handover" not in modes:
        report["note"] = ("mitigation verifies handover decisions only; "
                          "this attack does not target handover")

    out_dir = Path(args.out) / f"{scenario.name}-compare"
    _write(out_dir / "report.json",
           json.dumps(report, sort_keys=True, indent=2) + "\n")

    print(f"comparison for {scenario.name}, seeds {seeds[0]}..{seeds[-1]}")
    header = f"{'metric':<34}{'baseline':>12}{'tss':>12}"
    print(header)
    print("-" * len(header))
    for name, values in report["metrics"].items():
        print(f"{name:<34}{values['baseline']:>12}{values['tss']:>12}")
    if "note" in report:
        print(f"note: {report['note']}")
    return EXIT_OK


def cmd_vectors(args: argparse.Namespace) -> int:
    seed_path = Path(args.seed_file)
    if not seed_path.is_file():
        print(f"error: seed file not found: {seed_path}", file=sys.stderr)
        return EXIT_IO
    try:
        seed = int(seed_path.read_text().split()[0])
    except (ValueError, IndexError):
        print(f"error: seed file must start with an integer", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out) / "vectors.jsonl"
    _write(out, dump_vectors(seed, args.count))
    print(f"wrote {args.count} vectors to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrsecsim",
        description="Deterministic cellular access/handover security simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario")
    p_run.add_argument("--scenario", required=True, help="scenario YAML path")
    p_run.add_argument("--seed", default="1", help="seed N or range N..M")
    p_run.add_argument("--mode", choices=("baseline", "tss"), default=None,
                       help="override the scenario's mode")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run both modes and report metric deltas")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--seeds", required=True, help="seed range N..M")
    p_cmp.add_argument("--out", default="out")
    p_cmp.set_defaults(func=cmd_compare)

    p_vec = sub.add_parser("vectors", help="dump crypto test vectors")
    p_vec.add_argument("--seed-file", required=True,
                       help="file whose first token is the integer seed")
    p_vec.add_argument("--out", default="out")
    p_vec.add_argument("--count", type=int, default=1000)
    p_vec.set_defaults(func=cmd_vectors)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
