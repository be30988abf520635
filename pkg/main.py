import argparse
import csv
import io
import json
import sys
import traceback
from typing import Callable, Dict, List, Optional

import dotenv
from pydantic import ValidationError

from Resources import Console
from Resources.Bounds import table_to_csv, table_to_json, thm_bounds
from Resources.Config import RunConfig, Settings
from Resources.Diagram import build_diagram, to_dot
from Resources.Errors import BudgetExceededError, KloostermanError
from Resources.KloostermanSum import CharacterPair, SumRecord, evaluate_sum, evaluate_sum_gamma0
from Resources.VerifySuites import VerifyOptions, VerifySuites
from Resources.WeylElement import make_admissible

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_VERIFICATION = 3

SUM_CSV_COLUMNS = (
    "schema", "p", "blocks", "r", "psi", "psi_prime", "level", "modulus", "value_integer",
    "value_real", "value_imag", "magnitude", "magnitude_error", "cell_count",
)
ASSIGNMENT_CSV_COLUMNS = ("assignment", "assignment_cell_count", "assignment_magnitude")


class ConfigArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad arguments; here that code means an exhausted budget."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a comma-separated list of integers.")


def _joined(values) -> str:
    return ",".join(str(x) for x in values)


def _config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    return RunConfig(
        p=args.p, blocks=args.blocks, r=args.r, psi=args.psi, psi_prime=args.psi_prime,
        level=getattr(args, "level", 0), output_format=args.format,
        budget=args.budget or settings.budget, threads=args.threads or settings.threads,
    )


def render_sum(record: SumRecord, output_format: str) -> str:
    if output_format == "json":
        return record.model_dump_json(by_alias=True, exclude_none=True, indent=2)
    data = record.model_dump(by_alias=True)
    if output_format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(SUM_CSV_COLUMNS + ASSIGNMENT_CSV_COLUMNS)
        summary = [_joined(data[c]) if isinstance(data[c], list) else data[c] for c in SUM_CSV_COLUMNS]
        if record.breakdown:
            for piece in record.breakdown:
                writer.writerow(summary + [_joined(piece.m), piece.cell_count, piece.magnitude])
        else:
            writer.writerow(summary + [""] * len(ASSIGNMENT_CSV_COLUMNS))
        return buffer.getvalue().rstrip("\n")
    lines = [
        f"blocks={tuple(record.blocks)} p={record.p} r={tuple(record.r)} level={record.level}",
        f"psi={tuple(record.psi)} psi'={tuple(record.psi_prime)}",
        f"value      = sum n_t e(t/{record.modulus}) with n = {record.value_coefficients}",
    ]
    if record.value_integer is not None:
        lines.append(f"integer    = {record.value_integer}")
    lines += [
        f"complex    = {record.value_real:.12g} {record.value_imag:+.12g}i",
        f"magnitude  = {record.magnitude:.12g} (error <= {record.magnitude_error:.3g})",
        f"cell_count = {record.cell_count}",
    ]
    if record.elapsed_ms is not None:
        lines.append(f"elapsed_ms = {record.elapsed_ms:.1f}")
    for piece in record.breakdown or []:
        lines.append(f"  m={tuple(piece.m)} cells={piece.cell_count} |piece|={piece.magnitude:.12g}")
    return "\n".join(lines)


def cmd_sum(args: argparse.Namespace, settings: Settings) -> int:
    config = _config(args, settings)
    w = make_admissible(config.blocks)
    chars = CharacterPair(config.psi, config.psi_prime)
    if config.level > 0:
        result = evaluate_sum_gamma0(w, config.r, chars, config.p, config.level, config.budget, config.threads)
    else:
        result = evaluate_sum(w, config.r, chars, config.p, config.budget, config.threads)
    record = result.record(w, config.p, config.r, chars, config.level, timing=args.timing, breakdown=args.breakdown)
    print(render_sum(record, config.output_format))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    options = VerifyOptions(
        primes=args.p or [2, 3], max_dim=args.max_dim, cases=args.cases, max_m=args.max_m, max_r=args.max_r,
        blocks=args.blocks, r=args.r, seed=args.seed,
        budget=args.budget or settings.budget, threads=args.threads or settings.threads,
    )
    results = VerifySuites(options).run(args.suite)
    if args.format == "json":
        print(json.dumps({"schema": 1, "suite": args.suite, "cases": [r.model_dump() for r in results]}, indent=2))
    else:
        for result in results:
            print(f"{'ok  ' if result.passed else 'FAIL'} {result.case}" + (f"  {result.detail}" if result.detail else ""))
    return EXIT_OK if all(result.passed for result in results) else EXIT_VERIFICATION


def cmd_diagram(args: argparse.Namespace, settings: Settings) -> int:
    print(to_dot(build_diagram(make_admissible(args.blocks))), end="")
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace, settings: Settings) -> int:
    config = _config(args, settings)
    w = make_admissible(config.blocks)
    report = thm_bounds(w, config.r, CharacterPair(config.psi, config.psi_prime), config.p,
                        config.budget, config.threads, config.level)
    if config.output_format == "json":
        print(table_to_json([report]))
    elif config.output_format == "csv":
        print(table_to_csv([report]), end="")
    else:
        for name, value in report.model_dump().items():
            print(f"{name:<20} {value}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "sum": cmd_sum,
    "verify": cmd_verify,
    "diagram": cmd_diagram,
    "bounds": cmd_bounds,
}


def _add_sum_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=int, required=True, help="The prime.")
    parser.add_argument("--blocks", type=int_list, required=True, help="Block sizes, e.g. 2,3.")
    parser.add_argument("--r", type=int_list, help="Exponent vector r_1..r_N.")
    parser.add_argument("--psi", type=int_list, help="Left character psi_1..psi_N.")
    parser.add_argument("--psi-prime", dest="psi_prime", type=int_list, help="Right character psi'_1..psi'_N.")
    parser.add_argument("--format", choices=("json", "csv", "text"), default="text")
    parser.add_argument("--budget", type=int, help="Enumeration budget (default KLOOSTERMAN_BUDGET or 10^8).")
    parser.add_argument("--threads", type=int, help="Worker threads (default KLOOSTERMAN_THREADS).")


def build_parser() -> argparse.ArgumentParser:
    parser = ConfigArgumentParser(prog="kloosterman", description="Exact generalized Kloosterman sums over Q_p.")
    parser.add_argument("--verbose", action="store_true", help="Print debug lines to stderr.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ConfigArgumentParser)

    sum_parser = commands.add_parser("sum", help="Evaluate Kl_p(psi, psi', fc * w).")
    _add_sum_arguments(sum_parser)
    sum_parser.add_argument("--level", type=int, default=0, help="Restrict to Gamma_0(p^level).")
    sum_parser.add_argument("--breakdown", action="store_true", help="Include every moduli assignment.")
    sum_parser.add_argument("--timing", action="store_true", help="Include elapsed_ms in the record.")

    verify_parser = commands.add_parser("verify", help="Run a verification suite.")
    verify_parser.add_argument("suite", choices=("bruhat", "counts", "oracle", "identities", "bounds"))
    verify_parser.add_argument("--p", type=int_list, help="Primes to check, default 2,3.")
    verify_parser.add_argument("--blocks", type=int_list, help="Restrict to one composition.")
    verify_parser.add_argument("--r", type=int_list, help="Restrict the oracle suite to one exponent vector.")
    verify_parser.add_argument("--max-dim", dest="max_dim", type=int, default=5)
    verify_parser.add_argument("--cases", type=int, default=200)
    verify_parser.add_argument("--max-m", dest="max_m", type=int, default=3)
    verify_parser.add_argument("--max-r", dest="max_r", type=int, default=3)
    verify_parser.add_argument("--seed", type=int, default=0)
    verify_parser.add_argument("--format", choices=("json", "text"), default="text")
    verify_parser.add_argument("--budget", type=int)
    verify_parser.add_argument("--threads", type=int)

    diagram_parser = commands.add_parser("diagram", help="Emit the numbered vertex diagram as DOT.")
    diagram_parser.add_argument("--blocks", type=int_list, required=True)

    bounds_parser = commands.add_parser("bounds", help="Report the trivial, Weil and power-saving bounds.")
    _add_sum_arguments(bounds_parser)
    bounds_parser.add_argument("--level", type=int, default=0, help="Bound the Gamma_0(p^level) restriction.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    dotenv.load_dotenv(dotenv.find_dotenv(usecwd=True))
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_environment(load_env_file=False)
        Console.set_debug(args.verbose or settings.debug)
        return COMMANDS[args.command](args, settings)
    except BudgetExceededError as e:
        if Console.DEBUG_MODE:
            traceback.print_exc()
        Console.log("Error", str(e))
        return EXIT_BUDGET
    except (ValidationError, KloostermanError) as e:
        if Console.DEBUG_MODE:
            traceback.print_exc()
        Console.log("Error", str(e))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
