"""Command-line front end.

    riccati-attitude run scenario.ini [--seed N] [--out-dir DIR] [--no-noise] [--variant {1,2,both}]
    riccati-attitude preset sim1 [...]
    riccati-attitude observability scenario.ini [--ablate-mag]

Exit status: 0 when every enabled check passes, 1 on a failed check,
2 on a configuration error, 3 when a Riccati solution loses positive
definiteness.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import EXIT_CONFIG_ERROR, run_observability, run_scenario
from .scenario import PRESETS, ConfigError, load_scenario, preset


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riccati-attitude", description="Velocity-aided Riccati attitude observers.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="override the sensor noise seed")
        sp.add_argument("--out-dir", help="output directory (default: from config, else ./out)")
        sp.add_argument("--no-noise", action="store_true", help="disable sensor noise")
        sp.add_argument("--variant", choices=("1", "2", "both"), help="observer(s) to run")
        sp.add_argument("--ablate-mag", action="store_true", help="include the magnetometer ablation analysis")
        sp.add_argument("-q", "--quiet", action="store_true", help="do not print the summary")

    common(sub.add_parser("run", help="run a scenario file"))
    sub.choices["run"].add_argument("scenario")
    common(sub.add_parser("preset", help="run a built-in scenario"))
    sub.choices["preset"].add_argument("name", choices=sorted(PRESETS))
    common(sub.add_parser("observability", help="observability analysis only"))
    sub.choices["observability"].add_argument("scenario")
    sub.add_parser("list-presets", help="print the built-in scenario names")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-presets":
        print("\n".join(sorted(PRESETS)))
        return 0
    overrides = dict(
        seed=args.seed,
        no_noise=args.no_noise,
        variant=args.variant,
        ablate_mag=True if args.ablate_mag else None,
        out_dir=args.out_dir,
    )
    try:
        if args.command == "preset":
            scn = preset(args.name, **overrides)
        else:
            scn = load_scenario(args.scenario, **overrides)
        if args.command == "observability":
            scn = replace(scn, run_observers=False, observability=True)
            summary = run_observability(scn)
            from pathlib import Path

            Path(scn.out_dir, "summary.txt").write_text(summary.text() + "\n")
        else:
            summary = run_scenario(scn)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if not args.quiet:
        print(summary.text())
    for o in summary.observers:
        if o.diverged:
            print(f"observer {o.variant}: {o.diverged}", file=sys.stderr)
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
