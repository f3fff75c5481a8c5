"""
Command-line front end for separators and interpolants.

Key features:
- Commands: sat, entails, modelcheck, separate, interpolate, decide,
  explain, oracle, bench, verify-cert
- Formulas are given inline or as @file references
- Three-valued outcomes wherever a budget exists; unknown is never
  reported as "no"
- Stable exit codes: 0/1 for the boolean answer, 2 for parse or
  configuration errors, 3 for unknown (budget or round cap)
- --json reports, --output certificate files, --csv elimination traces

Usage:
    python interpolator.py sat --logic H "p & ~p"
    python interpolator.py separate --sigma p "p & q" "~p & r"
    python interpolator.py interpolate "p & q" "p | r"
    python interpolator.py decide --sigma R "'a & <R>'a" "'b & [R]~'b"
    python interpolator.py bench emit --family phi_n --n 3 --out bench/
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from formula_families import FAMILIES, FamilySpec, GeneratorError, emit_family, emit_growth_csv
from formulas import (
    FormulaId, LogicId, ParseError, Signature, craig_to_separator, parse, print_formula, resolve_sigma,
)
from hypermosaic import MODES, SEARCH, decide, eliminate_reference, initial_pairs
from hyperseparator import (
    DEFAULT_MAX_ROUNDS, DEFAULT_WORK_BUDGET, RoundCapExceeded, construct, load_certificate, save_certificate,
    verify_certificate,
)
from kripke import Model, ModelError, joint_consistency_oracle, model_check
from mosaics import BudgetExceeded, Mosaic
from shared_nominals import PreconditionError, SharedNominalSeparator, VerificationError, fo_separator
from solver_backends import BACKENDS, DEFAULT_SOLVER
from type_elimination import SatOracle

logger = logging.getLogger(__name__)

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_ERROR = 2
EXIT_UNKNOWN = 3

COMMANDS = ("sat", "entails", "modelcheck", "separate", "interpolate", "decide",
            "explain", "oracle", "bench", "verify-cert")
ENGINES = ("hyper", "shared", "fo")


class ConfigError(ValueError):
    """Invalid command-line configuration."""


# ----------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------

@dataclass
class JobConfig:
    command: str
    inputs: List[str] = field(default_factory=list)
    logic: Optional[str] = None
    sigma: str = "shared"
    max_rounds: int = DEFAULT_MAX_ROUNDS
    max_oracle_worlds: int = 3
    budget: int = 20000
    work_budget: int = DEFAULT_WORK_BUDGET
    mode: str = SEARCH
    audit: bool = False
    engine: str = "hyper"
    solver: str = DEFAULT_SOLVER
    seed: int = 0
    json: bool = False
    output: Optional[str] = None
    csv: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}")
        for name in ("max_rounds", "max_oracle_worlds", "budget", "work_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.engine not in ENGINES:
            raise ConfigError(f"Unknown engine {self.engine!r}; expected one of {', '.join(ENGINES)}")
        if self.solver not in BACKENDS:
            raise ConfigError(f"Unknown solver {self.solver!r}; expected one of {', '.join(BACKENDS)}")
        if self.logic is not None:
            try:
                LogicId.parse(self.logic)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    def logic_id(self, formulas: List[FormulaId]) -> LogicId:
        """The logic given with --logic, else the least one containing the inputs."""
        if self.logic is not None:
            return LogicId.parse(self.logic)
        return LogicId.for_formulas(formulas)

    def parsed_logic(self) -> Optional[LogicId]:
        return LogicId.parse(self.logic) if self.logic is not None else None


def read_input(text: str) -> str:
    """Inline formula text, or the contents of the file named after '@'."""
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                return fh.read().strip()
        except OSError as exc:
            raise ConfigError(f"cannot read {text[1:]}: {exc}") from exc
    return text


def _formulas(config: JobConfig, count: int) -> List[FormulaId]:
    if len(config.inputs) != count:
        raise ConfigError(f"{config.command} expects {count} formula(s), got {len(config.inputs)}")
    logic = config.parsed_logic()
    return [parse(read_input(text), logic) for text in config.inputs]


def _pair(config: JobConfig) -> Tuple[FormulaId, FormulaId, Signature, LogicId]:
    f1, f2 = _formulas(config, 2)
    return f1, f2, resolve_sigma(config.sigma, f1, f2), config.logic_id([f1, f2])


def _oracle(config: JobConfig) -> SatOracle:
    return SatOracle(solver=config.solver)


def _emit(config: JobConfig, text: str, report: Dict) -> None:
    if config.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(text)


def _progress(enabled: bool) -> Optional[Callable]:
    if not enabled:
        return None

    def callback(msg: str) -> None:
        print(msg, file=sys.stderr)
    return callback


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def cmd_sat(config: JobConfig, callback: Optional[Callable] = None) -> int:
    (f,) = _formulas(config, 1)
    result = _oracle(config).satisfiable(f)
    _emit(config, "sat" if result else "unsat", {"formula": print_formula(f), "satisfiable": result})
    return EXIT_TRUE if result else EXIT_FALSE


def cmd_entails(config: JobConfig, callback: Optional[Callable] = None) -> int:
    f, g = _formulas(config, 2)
    result = _oracle(config).entails(f, g)
    _emit(config, "entailed" if result else "not entailed",
          {"premise": print_formula(f), "conclusion": print_formula(g), "entails": result})
    return EXIT_TRUE if result else EXIT_FALSE


def cmd_modelcheck(config: JobConfig, callback: Optional[Callable] = None) -> int:
    if len(config.inputs) != 3:
        raise ConfigError("modelcheck expects MODEL WORLD FORMULA")
    path, world, text = config.inputs
    try:
        M = Model.load(path)
        w = int(world)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad model or world: {exc}") from exc
    f = parse(read_input(text), config.parsed_logic())
    result = model_check(M, w, f)
    _emit(config, "true" if result else "false",
          {"model": path, "world": w, "formula": print_formula(f), "holds": result})
    return EXIT_TRUE if result else EXIT_FALSE


def _separate(config: JobConfig, f1: FormulaId, f2: FormulaId, sigma: Signature, logic: LogicId,
              callback: Optional[Callable]) -> Tuple[Optional[str], Dict]:
    """(separator text or None, report); raises on unknown outcomes."""
    oracle = _oracle(config)
    if config.engine == "fo":
        text = fo_separator(f1, f2, sigma, logic, oracle, callback)
        return text, {"engine": "fo", "separator": text, "sigma": sigma.to_text(), "logic": logic.name}
    if config.engine == "shared":
        builder = SharedNominalSeparator(f1, f2, sigma, logic, oracle, callback)
        sep = builder.construct()
        if sep is not None:
            builder.verify(sep)
        text = print_formula(sep, "dag") if sep is not None else None
        return text, {"engine": "shared", "separator": text, "sigma": sigma.to_text(), "logic": logic.name}
    result = construct(f1, f2, sigma, logic, config.max_rounds, mode=config.mode, budget=config.budget,
                       audit=config.audit, solver=config.solver, oracle=oracle, callback=callback,
                       work_budget=config.work_budget)
    cert = dict(result.certificate, engine="hyper")
    return cert.get("separator"), cert


def _report_separation(config: JobConfig, text: Optional[str], report: Dict, noun: str) -> int:
    if config.output:
        save_certificate(report, config.output)
    if text is None:
        _emit(config, f"none: the inputs are jointly consistent, no {noun} exists", report)
        return EXIT_FALSE
    _emit(config, text, report)
    return EXIT_TRUE


def cmd_separate(config: JobConfig, callback: Optional[Callable] = None) -> int:
    f1, f2, sigma, logic = _pair(config)
    text, report = _separate(config, f1, f2, sigma, logic, callback)
    return _report_separation(config, text, report, "separator")


def cmd_interpolate(config: JobConfig, callback: Optional[Callable] = None) -> int:
    f, g = _formulas(config, 2)
    logic = config.logic_id([f, g])
    f1, f2, sigma = craig_to_separator(f, g)
    text, report = _separate(config, f1, f2, sigma, logic, callback)
    report.update(premise=print_formula(f), conclusion=print_formula(g), interpolant=text)
    return _report_separation(config, text, report, "interpolant")


def cmd_decide(config: JobConfig, callback: Optional[Callable] = None) -> int:
    f1, f2, sigma, logic = _pair(config)
    result = decide(f1, f2, sigma, logic, config.mode, config.budget, solver=config.solver,
                    callback=callback)
    report = dict(result.to_json(), sigma=sigma.to_text(), logic=logic.name)
    if result.separator_exists is None:
        _emit(config, f"unknown ({config.mode}, budget {config.budget})", report)
        return EXIT_UNKNOWN
    text = "separator exists" if result.separator_exists else "no separator"
    _emit(config, f"{text} ({config.mode})", report)
    return EXIT_TRUE if result.separator_exists else EXIT_FALSE


def cmd_explain(config: JobConfig, callback: Optional[Callable] = None) -> int:
    """Elimination trace: reference rounds, or the warm-up cases with --engine shared."""
    f1, f2, sigma, logic = _pair(config)
    if config.engine == "shared":
        builder = SharedNominalSeparator(f1, f2, sigma, logic, _oracle(config), callback)
        exists = builder.surviving_pair() is None
        frame = builder.trace_frame()
        report = {"engine": "shared", "separator_exists": exists, "eliminated": frame.to_dict("records")}
    else:
        state = eliminate_reference(f1, f2, sigma, logic, budget=config.budget, solver=config.solver,
                                    callback=callback)
        exists = not any(state.alive(frozenset({Mosaic.of([t1], [t2])}))
                         for t1, t2 in initial_pairs(f1, f2, state.space))
        frame = state.trace_frame()
        report = dict(state.to_json(), engine="reference", separator_exists=exists)
    if config.csv:
        frame.to_csv(config.csv, index=False)
    _emit(config, frame.to_string(index=False) if len(frame) else "(nothing eliminated)", report)
    return EXIT_TRUE if exists else EXIT_FALSE


def cmd_oracle(config: JobConfig, callback: Optional[Callable] = None) -> int:
    f1, f2, sigma, logic = _pair(config)
    witness = joint_consistency_oracle(f1, f2, sigma, logic, config.max_oracle_worlds, seed=config.seed)
    if witness is None:
        _emit(config, f"none up to {config.max_oracle_worlds} worlds",
              {"witness": None, "max_worlds": config.max_oracle_worlds, "seed": config.seed})
        return EXIT_FALSE
    report = {"witness": witness.to_dict(), "max_worlds": config.max_oracle_worlds, "seed": config.seed}
    _emit(config, json.dumps(witness.to_dict(), sort_keys=True), report)
    return EXIT_TRUE


def cmd_verify_cert(config: JobConfig, callback: Optional[Callable] = None) -> int:
    if len(config.inputs) != 1:
        raise ConfigError("verify-cert expects one certificate file")
    try:
        cert = load_certificate(config.inputs[0])
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load certificate: {exc}") from exc
    checks = verify_certificate(cert, _oracle(config), config.budget)
    _emit(config, "valid" if checks["valid"] else f"invalid: {checks}", checks)
    return EXIT_TRUE if checks["valid"] else EXIT_FALSE


COMMAND_TABLE = {
    "sat": cmd_sat,
    "entails": cmd_entails,
    "modelcheck": cmd_modelcheck,
    "separate": cmd_separate,
    "interpolate": cmd_interpolate,
    "decide": cmd_decide,
    "explain": cmd_explain,
    "oracle": cmd_oracle,
    "verify-cert": cmd_verify_cert,
}


def cmd_bench(args: argparse.Namespace, callback: Optional[Callable] = None) -> int:
    params: Dict = {"seed": args.seed}
    if args.n is not None:
        params["n"] = args.n
    if args.logic is not None:
        params["logic"] = args.logic
    if args.action == "emit":
        entry = emit_family(FamilySpec(args.family, params), args.out, callback)
        print(json.dumps(entry, indent=2, sort_keys=True) if args.json else ", ".join(entry["files"].values()))
        return EXIT_TRUE
    ns = args.ns or ([args.n] if args.n is not None else [])
    if not ns:
        raise ConfigError("bench growth needs --ns or --n")
    params.pop("n", None)
    if args.family != "random":
        params.pop("seed", None)
    print(emit_growth_csv(args.family, ns, args.out, **params))
    return EXIT_TRUE


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--logic", default=None, help="H, H@, H@U, G, G@ or G@U (default: least logic of the inputs)")
    p.add_argument("--sigma", default="shared", help="comma list of symbols ('a for nominals, U), or 'shared'")
    p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS, help="hyperseparator round cap")
    p.add_argument("--max-oracle-worlds", type=int, default=3, help="worlds per side for the model oracle")
    p.add_argument("--budget", type=int, default=20000, help="hypermosaic search node budget")
    p.add_argument("--work-budget", type=int, default=DEFAULT_WORK_BUDGET,
                   help="oracle calls allowed for hyperseparator refinement")
    p.add_argument("--mode", choices=MODES, default=SEARCH, help="hypermosaic engine")
    p.add_argument("--engine", choices=ENGINES, default="hyper", help="separator construction")
    p.add_argument("--audit", action="store_true", help="check every hyperseparator round for soundness")
    p.add_argument("--solver", choices=BACKENDS, default=DEFAULT_SOLVER, help="integer feasibility backend")
    p.add_argument("--seed", type=int, default=0, help="model enumeration order for the oracle (0: canonical)")
    p.add_argument("--json", action="store_true", help="print a JSON report")
    p.add_argument("--output", default=None, help="certificate file for separate/interpolate")
    p.add_argument("--csv", default=None, help="trace CSV for explain")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--progress", action="store_true", help="progress messages on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Separators and Craig interpolants for hybrid modal logics")
    sub = parser.add_subparsers(dest="command", required=True)
    arity = {
        "sat": ("FORMULA", 1), "entails": ("FORMULA", 2), "modelcheck": ("MODEL WORLD FORMULA", 3),
        "separate": ("FORMULA", 2), "interpolate": ("FORMULA", 2), "decide": ("FORMULA", 2),
        "explain": ("FORMULA", 2), "oracle": ("FORMULA", 2), "verify-cert": ("CERTIFICATE", 1),
    }
    for name, (metavar, count) in arity.items():
        p = sub.add_parser(name)
        p.add_argument("inputs", nargs=count, metavar=metavar.split()[0] if count != 3 else "INPUT",
                       help=f"{metavar} (formulas inline or @file)")
        _add_common(p)
    bench = sub.add_parser("bench", help="emit formula families")
    bench.add_argument("action", choices=("emit", "growth"))
    bench.add_argument("--family", choices=FAMILIES, required=True)
    bench.add_argument("--n", type=int, default=None)
    bench.add_argument("--ns", type=int, nargs="*", default=None, help="sizes for the growth table")
    bench.add_argument("--logic", default=None)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default="bench")
    bench.add_argument("--json", action="store_true")
    bench.add_argument("--verbose", action="store_true")
    bench.add_argument("--progress", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    callback = _progress(args.progress)
    try:
        if args.command == "bench":
            return cmd_bench(args, callback)
        config = JobConfig(
            command=args.command, inputs=list(args.inputs), logic=args.logic, sigma=args.sigma,
            max_rounds=args.max_rounds, max_oracle_worlds=args.max_oracle_worlds, budget=args.budget,
            work_budget=args.work_budget,
            mode=args.mode, audit=args.audit, engine=args.engine, solver=args.solver, seed=args.seed,
            json=args.json, output=args.output, csv=args.csv,
        )
        return COMMAND_TABLE[config.command](config, callback)
    except (BudgetExceeded, RoundCapExceeded) as exc:
        print(f"unknown: {exc}")
        return EXIT_UNKNOWN
    except VerificationError as exc:
        logger.error("Verification failed: %s", exc)
        raise
    except (ParseError, ModelError, PreconditionError, GeneratorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
