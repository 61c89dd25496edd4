"""
Command line driver::

    ncmart verify  --dims 2,4 --ns 2,3 --p-grid 0.5,1,2 --trials 100 --seed 7
    ncmart trace   --p-grid 0.5,1.5,3
    ncmart maximal --p-grid 2,3 --gap-tol 1e-6
    ncmart search  --theorem dd_down --p-grid 0.5 --ascent-steps 500
    ncmart sweep   --theorem dd_up --p-grid 1,1.5,2

Exit status is 0 when no slack violation occurred, 1 on a violation (the
offending instance is dumped at CRITICAL level) and 2 on a configuration
error.  Flags override values from ``--config`` (TOML); ``NCMART_SEED`` is
consulted only when ``--seed`` is absent everywhere.
"""
import argparse
import csv
import io
import logging
import os
import sys

import tomli

from ._fmt import dumps17, fmt_float
from .errors import BoundViolation, ConfigError
from .harness import SuiteConfig, run_suite

log = logging.getLogger("ncmart")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="ncmart", description="Noncommutative dual Doob verification laboratory")
    sub = parser.add_subparsers(dest="suite", required=True)
    for name in ("verify", "trace", "maximal", "search", "sweep"):
        sp = sub.add_parser(name)
        sp.error = parser.error
        sp.add_argument("--config", help="TOML file with default settings")
        sp.add_argument("--dims", type=_ints)
        sp.add_argument("--ns", type=_ints)
        sp.add_argument("--p-grid", dest="p_grid", type=_floats)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", dest="master_seed", type=int)
        sp.add_argument("--tower-kinds", dest="tower_kinds", type=_strs)
        sp.add_argument("--output", dest="output_path")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--theorem")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--ascent-steps", dest="ascent_steps", type=int)
        sp.add_argument("--barrier-mu0", dest="barrier_mu0", type=float)
        sp.add_argument("--gap-tol", dest="gap_tol", type=float)
        sp.add_argument("--max-iters", dest="max_iters", type=int)
    return parser


_FIELDS = set(SuiteConfig.__dataclass_fields__) - {"suite"}
_ALIASES = {"seed": "master_seed", "output": "output_path", "p-grid": "p_grid",
            "tower-kinds": "tower_kinds", "ascent-steps": "ascent_steps",
            "barrier-mu0": "barrier_mu0", "gap-tol": "gap_tol", "max-iters": "max_iters"}


def load_config(argv, environ=None):
    environ = os.environ if environ is None else environ
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                raw = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for key, val in raw.items():
            key = _ALIASES.get(key, key)
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val
    for key in _FIELDS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if "master_seed" not in values and "NCMART_SEED" in environ:
        try:
            values["master_seed"] = int(environ["NCMART_SEED"])
        except ValueError as exc:
            raise ConfigError(f"NCMART_SEED is not an integer: {environ['NCMART_SEED']!r}") from exc
    return SuiteConfig(suite=args.suite, **values).validate()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def render(result, fmt):
    if fmt == "json":
        rows = result.json_rows if result.json_rows is not None else result.rows
        return "[\n" + ",\n".join(dumps17(r) for r in rows) + "\n]\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_cell(row[c]) for c in result.columns])
    return buf.getvalue()


def run(cfg, stdout=None, stderr=None):
    """Execute a validated :class:`SuiteConfig`; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result = run_suite(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return 2
    except BoundViolation as exc:
        log.critical("bound violation: %s", exc)
        print(f"CRITICAL {exc}\n{exc.instance}", file=stderr)
        return 1
    text = render(result, cfg.format)
    if cfg.output_path in (None, "-"):
        stdout.write(text)
        summary_to = stderr
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
        summary_to = stdout
    for v in result.violations:
        log.critical("slack violation: %s", dumps17(v))
        print("CRITICAL " + dumps17(v), file=stderr)
    print(f"instances={result.instances} rows={len(result.rows)} "
          f"min_slack={fmt_float(result.min_slack)} max_fraction={fmt_float(result.max_fraction)} "
          f"violations={len(result.violations)}", file=summary_to)
    return 1 if result.violations else 0


def main(argv=None, environ=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv, environ)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
