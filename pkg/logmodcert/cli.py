"""
Command-line front door.

``run(argv)`` dispatches ``<command> [args...]`` to the subcommand modules
in ``logmodcert.commands``. Exit codes: 0 when every check passes, 2 when a
certificate or verification fails, 1 on usage, config or I/O errors.
"""

import argparse
import importlib
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from logmodcert import config, report
from logmodcert.errors import CertError, ConfigError, HypothesisError, UsageError

log = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

# Mapping between CLI subcommands and their entry modules
COMMANDS = {
    "chain": "logmodcert.commands.chain",
    "logmod": "logmodcert.commands.logmod",
    "blowup": "logmodcert.commands.blowup",
    "budget": "logmodcert.commands.budget",
    "lab": "logmodcert.commands.lab",
}

COMMON_DESTS = {"config", "seed", "out", "threads", "tol_geo", "log_level", "gnuplot_script", "selftest", "action"}


class CliParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; usage errors here map to 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"❌ {self.prog}: {message}")


# ==========================================
# RUN CONTEXT
# ==========================================
@dataclass
class RunContext:
    name: str
    seed: int
    out: str
    threads: int
    gnuplot: bool
    params: Dict[str, Any]
    artifacts: List[str] = field(default_factory=list)

    def get(self, key: str, default: Any = None) -> Any:
        value = self.params.get(key)
        return default if value is None else value

    def path(self, filename: str) -> str:
        return os.path.join(self.out, filename)

    def write_json(self, filename: str, payload: Dict[str, Any]) -> str:
        report.write_json(self.path(filename), payload)
        self.artifacts.append(filename)
        return filename

    def write_csv(self, filename: str, header: Sequence[str], rows, plot: Optional[Dict[str, Any]] = None) -> str:
        csv_path = report.write_csv(self.path(filename), header, rows)
        self.artifacts.append(filename)
        if self.gnuplot and plot is not None:
            script = report.write_gnuplot_script(csv_path, **plot)
            self.artifacts.append(os.path.basename(script))
        return filename

    def finish(self, passed: bool, metrics: Dict[str, Any], certificate: Optional[Dict[str, Any]] = None) -> int:
        payload = report.build_report(passed, metrics, certificate, self.artifacts)
        report.write_json(self.path(f"{self.name}-report.json"), payload)
        if passed:
            log.info(f"✅ {self.name}: all checks passed")
            return EXIT_PASS
        log.error(f"❌ {self.name}: check failed")
        return EXIT_FAIL


# ==========================================
# PARSING
# ==========================================
def make_parser(prog: str, description: str, actions: Sequence[str]) -> CliParser:
    parser = CliParser(prog=prog, description=description)
    parser.add_argument("action", nargs="?", choices=list(actions), help=f"Action to run ({', '.join(actions)})")
    parser.add_argument("--config", help="JSON run configuration; explicit flags win over its values.")
    parser.add_argument("--seed", type=int, default=None, help="Seed for every randomized step (default: config or 0).")
    parser.add_argument("--out", default=None, help="Output directory for reports and artifacts (default: config or '.').")
    parser.add_argument("--threads", type=int, default=None, help="Worker pool size (default: env LOGMOD_THREADS or the number of cores).")
    parser.add_argument("--tol-geo", type=float, default=None, help="Geometric tolerance override (default: 1e-10).")
    parser.add_argument("--log-level", default=os.getenv("LOGMOD_LOG_LEVEL", "INFO"), help="Logging level (default: INFO).")
    parser.add_argument("--gnuplot-script", action="store_true", help="Write a gnuplot script next to every CSV curve.")
    parser.add_argument("--selftest", action="store_true", help="Run the built-in sanity checks of this subcommand.")
    return parser


def parse_floats(value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"❌ Expected a comma-separated list of numbers, got '{value}'")


def parse_ints(value: Optional[str]) -> Optional[List[int]]:
    floats = parse_floats(value)
    return None if floats is None else [int(v) for v in floats]


def setup_run(args: argparse.Namespace, block: str) -> RunContext:
    logging.getLogger("logmodcert").setLevel(args.log_level.upper())
    cfg = config.RunConfig.load(args.config) if args.config else config.RunConfig()
    overrides = dict(cfg.tolerances)
    if args.tol_geo is not None:
        overrides["eps_geo"] = args.tol_geo
    config.apply_tolerance_overrides(overrides)
    flags = {k: v for k, v in vars(args).items() if k not in COMMON_DESTS}
    seed = cfg.seed if args.seed is None else args.seed & config.SEED_MASK
    out = args.out if args.out is not None else cfg.out
    os.makedirs(out, exist_ok=True)
    threads = config.resolve_threads(args.threads if args.threads is not None else cfg.threads)
    ctx = RunContext(
        name=f"{block}-{'selftest' if args.selftest else args.action}",
        seed=seed,
        out=out,
        threads=threads,
        gnuplot=bool(args.gnuplot_script),
        params=cfg.merged(block, flags),
    )
    log.info(f"🚀 {ctx.name}: seed={seed}, threads={threads}, out={out}")
    return ctx


def dispatch(
    parser: CliParser,
    argv: Sequence[str],
    block: str,
    actions: Dict[str, Callable[[RunContext], int]],
    selftest: Callable[[RunContext], int],
) -> int:
    try:
        args = parser.parse_args(list(argv))
        if not args.selftest and args.action is None:
            parser.error("an action is required")
        ctx = setup_run(args, block)
        if args.selftest:
            return selftest(ctx)
        return actions[args.action](ctx)
    except UsageError as e:
        log.error(str(e))
        return EXIT_ERROR
    except HypothesisError as e:
        log.error(str(e))
        return EXIT_FAIL
    except (ConfigError, OSError) as e:
        log.error(f"❌ {e}" if not str(e).startswith("❌") else str(e))
        return EXIT_ERROR
    except CertError as e:
        log.error(str(e))
        return EXIT_ERROR


def selftest_report(ctx: RunContext, checks: Dict[str, bool]) -> int:
    for name, ok in checks.items():
        log.info(f"{'✅' if ok else '❌'} {name}")
    return ctx.finish(all(checks.values()), {"checks": checks})


# ==========================================
# ENTRY POINT
# ==========================================
def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = CliParser(prog="lmc", description="Log-modulus certification toolkit")
    parser.add_argument("command", help=f"Command to execute ({', '.join(COMMANDS.keys())})")
    parser.add_argument("args", nargs=argparse.REMAINDER, help="Arguments passed to the subcommand")
    try:
        parsed = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as e:
        log.error(str(e))
        return EXIT_ERROR

    if parsed.command not in COMMANDS:
        log.error(f"❌ Unknown command: {parsed.command}")
        log.error(f"Available commands: {', '.join(COMMANDS.keys())}")
        return EXIT_ERROR

    module = importlib.import_module(COMMANDS[parsed.command])
    return module.main(parsed.args)
