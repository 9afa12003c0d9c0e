"""Command line entry point: ``g2cy verify`` runs property suites, ``g2cy glue`` runs a config.

Exit status 0 means every assertion passed, 1 an assertion failed, 2 a usage or config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .gluing import ConfigError, GluingConfig
from .suites import SUITE_NAMES, SuiteSpec, UsageError, run_suite
from .torsion import StageError, glue_and_solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("g2cy")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="g2cy", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("--suite", required=True, choices=SUITE_NAMES)
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--scalar", choices=("rational", "float"), default="rational")
    v.add_argument("--tol", type=float, default=None, help="override every check tolerance")
    v.add_argument("--jobs", type=int, default=1, help="worker processes for independent trials")
    v.add_argument("--out", type=Path, default=None, help="JSON report path (stdout if omitted)")

    g = sub.add_parser("glue", help="glue a matching pair and remove torsion")
    g.add_argument("--config", required=True, help="JSON config path, or 'flat' / 'perturbed' for a bundled one")
    g.add_argument("--out", type=Path, required=True, help="JSON report path; the residual CSV goes next to it")
    g.add_argument("--timing", action="store_true", help="include wall times (breaks bit-identical output)")
    return p


def _write(doc: dict, out: Path | None):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _summary(doc: dict) -> str:
    lines = []
    for c in doc["checks"]:
        lines.append(f"{'PASS' if c['pass'] else 'FAIL'} {doc['suite']}.{c['name']} "
                     f"runs={c['runs']} worst={c['worst']:.3e}")
        for f in c["failures"][:3]:
            lines.append(f"    trial {f['trial']}: {f['detail']} [{f['anchor']}]")
    return "\n".join(lines)


def cmd_verify(args) -> int:
    try:
        spec = SuiteSpec(args.suite, trials=args.trials, seed=args.seed, scalar=args.scalar,
                         tol=args.tol, jobs=args.jobs)
    except UsageError as err:
        print(f"g2cy verify: usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    doc, ok = run_suite(spec)
    _write(doc, args.out)
    print(_summary(doc), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _resolve_config(name: str):
    if name in ("flat", "perturbed"):
        from importlib.resources import files
        return files("g2cy") / "configs" / f"{name}.json"
    return Path(name)


def cmd_glue(args) -> int:
    path = _resolve_config(args.config)
    try:
        cfg = GluingConfig.load(path)
    except FileNotFoundError:
        print(f"g2cy glue: config error: no such file {path}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as err:
        print(f"g2cy glue: config error: invalid JSON: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"g2cy glue: config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rep = glue_and_solve(cfg)
    except StageError as err:
        print(f"g2cy glue: pipeline failure: {err}", file=sys.stderr)
        _write({"schema": "g2cy.glue-report/1", "config": cfg.to_json(), "ok": False,
                "error": {"stage": err.stage, "message": str(err)}}, args.out)
        return EXIT_FAIL
    _write(rep.to_json(timing=args.timing), args.out)
    csv_path = args.out.with_suffix(".residuals.csv")
    csv_path.write_text(rep.state.history_csv(timing=args.timing))
    st = rep.state
    print(f"{'PASS' if rep.ok else 'FAIL'} glue: iterations={st.iterations} residual={st.residual:.3e} "
          f"su3_ok={rep.validation['all_ok']} classes_ok={rep.classes.ok}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_glue(args)


if __name__ == "__main__":
    sys.exit(main())
