#!/usr/bin/env python3
"""
Command-line front end.

    python cli.py plan --src 2x2 --dst 3x4 --nblocks 12
    python cli.py simulate --chain 2x2,3x4,2x2 --nblocks 12
    python cli.py sweep --table2

Exit codes: 0 success, 1 domain failure (validation or verification), 2 usage.
"""
import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

import analytics
import redistribute
from config import TOOL_VERSION, configure_logging, get_settings
from errors import RedistError
from schedule import plan as build_plan
from schemas import CostModel, PlanDocument, RunReport, StatsModel, SweepRowModel, Table2Model
from topology import BlockDesc, GridShape, make_problem
from utils.csv_export import blocks_csv, stats_csv, sweep_csv, table2_csv, transfer_csv

logger = logging.getLogger(__name__)


def _grid(text: str) -> GridShape:
    try:
        return GridShape.parse(text)
    except RedistError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _chain(text: str) -> list[GridShape]:
    return [_grid(item) for item in text.split(",") if item.strip()]


def _config_pair(text: str) -> tuple[GridShape, GridShape]:
    src, sep, dst = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"config {text!r} must look like SRC:DST, e.g. 2x2:3x4")
    return _grid(src), _grid(dst)


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _write(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _json(payload) -> str:
    if hasattr(payload, "model_dump_json"):
        return payload.model_dump_json(indent=2)
    return json.dumps(payload, indent=2)


def _problem(args):
    return make_problem(args.src, args.dst, args.nblocks, args.block_size)


def cmd_plan(args) -> int:
    plan = build_plan(_problem(args), shifts=args.shifts)
    if args.format == "csv":
        _write(transfer_csv(plan.transfer), args.out)
    else:
        _write(_json(PlanDocument.from_plan(plan)), args.out)
    return 0


def cmd_stats(args) -> int:
    stats = analytics.stats(build_plan(_problem(args), shifts=args.shifts))
    if args.format == "csv":
        _write(stats_csv(stats), args.out)
    else:
        _write(_json(StatsModel.from_stats(stats)), args.out)
    return 0


def cmd_cost(args) -> int:
    problem = _problem(args)
    plan = build_plan(problem, shifts=args.shifts)
    if args.tau_per_byte is not None:
        params = analytics.CostParams.from_per_byte(args.lam, args.tau_per_byte, problem.blocks.nb)
    else:
        params = analytics.CostParams(lam=args.lam, tau=args.tau)
    result = CostModel(
        src=str(problem.src),
        dst=str(problem.dst),
        n_blocks=problem.n_blocks,
        steps=plan.steps,
        message_blocks=plan.message_blocks,
        lam=params.lam,
        tau=params.tau,
        modeled_cost_s=analytics.estimate_cost(plan, params),
    )
    if args.format == "csv":
        header = list(CostModel.model_fields)
        values = [str(getattr(result, name)) for name in header]
        _write(",".join(header) + "\n" + ",".join(values), args.out)
    else:
        _write(_json(result), args.out)
    return 0


def cmd_simulate(args) -> int:
    grids = args.chain or [args.src, args.dst]
    if len(grids) < 2 or any(grid is None for grid in grids):
        raise UsageError("simulate needs --src and --dst, or a --chain of at least two grids")
    desc = BlockDesc.from_blocks(args.nblocks, args.block_size)
    if desc.total_blocks > get_settings().MAX_SIM_BLOCKS:
        raise UsageError(f"{desc.total_blocks} blocks exceed the simulation limit of {get_settings().MAX_SIM_BLOCKS}")

    session = redistribute.resize_session(grids, desc, shifts=args.shifts)
    for hop in session.hops:
        status = "VERIFIED" if hop.verification.passed else "FAILED"
        line = (
            f"hop {hop.hop}: {hop.src} -> {hop.dst} steps={hop.stats.steps} copies={hop.stats.copies} "
            f"sendrecvs={hop.stats.sendrecvs} shift={hop.shift_case} "
            f"contentions_before={hop.contentions_before} contentions_after={hop.contentions_after} "
            f"{status} ({hop.verification.blocks_checked} blocks)"
        )
        if hop.contentions_after:
            line += f" [contended, max fan-in {hop.max_step_fan_in}]"
        sys.stdout.write(line + "\n")
    sys.stdout.write(("VERIFIED" if session.passed else "FAILED") + "\n")

    if args.report:
        _write(_json(RunReport.from_session(session, desc)), args.report)
    if args.dump_blocks:
        _write(blocks_csv(session.stores), args.dump_blocks)
    return 0 if session.passed else 1


def cmd_sweep(args) -> int:
    if args.table2:
        rows = analytics.compare_table2()
        if args.format == "csv":
            _write(table2_csv(rows), args.out)
        else:
            _write(_json([Table2Model.from_comparison(row).model_dump() for row in rows]), args.out)
        return 0

    configs = list(args.config or [])
    if args.preset:
        configs.extend(analytics.expansion_chain(args.preset))
    if not configs:
        raise UsageError("sweep needs --table2, --preset or at least one --config SRC:DST")
    params = analytics.CostParams(lam=args.lam, tau=args.tau)
    rows = analytics.sweep(configs, n_blocks=args.nblocks, params=params, shifts=args.shifts)
    if args.format == "csv":
        _write(sweep_csv(rows), args.out)
    else:
        _write(_json([SweepRowModel.from_row(row).model_dump() for row in rows]), args.out)
    return 0


class UsageError(Exception):
    """Arguments parsed but do not describe a runnable command."""


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="redistplan", description="Plan and simulate 2-D block-cyclic redistribution.")
    parser.add_argument("--version", action="version", version=f"redistplan {TOOL_VERSION}")
    parser.add_argument("--log-level", default=None, help="logging level for stderr diagnostics")
    commands = parser.add_subparsers(dest="command", required=True)

    def problem_flags(sub, required=True):
        sub.add_argument("--src", type=_grid, required=required, metavar="RxC", help="source processor grid")
        sub.add_argument("--dst", type=_grid, required=required, metavar="RxC", help="destination processor grid")
        sub.add_argument("--nblocks", type=_positive, required=True, metavar="N", help="block-grid side N = n / NB")
        sub.add_argument("--block-size", type=_positive, default=1, metavar="NB", help="block side in elements")

    def common_flags(sub, formats=True):
        sub.add_argument("--no-shifts", dest="shifts", action="store_false", default=settings.ENABLE_SHIFTS,
                         help="keep the raw schedule even when it has node contention")
        if formats:
            sub.add_argument("--format", choices=("json", "csv"), default=settings.FORMAT)
            sub.add_argument("--out", default=None, metavar="PATH", help="write to PATH instead of stdout")

    plan_cmd = commands.add_parser("plan", help="emit the communication schedule")
    problem_flags(plan_cmd)
    common_flags(plan_cmd)
    plan_cmd.set_defaults(handler=cmd_plan)

    stats_cmd = commands.add_parser("stats", help="steps, copies and send/recv counts")
    problem_flags(stats_cmd)
    common_flags(stats_cmd)
    stats_cmd.set_defaults(handler=cmd_stats)

    cost_cmd = commands.add_parser("cost", help="modeled transfer time steps * (lambda + blocks * tau)")
    problem_flags(cost_cmd)
    common_flags(cost_cmd)
    cost_cmd.add_argument("--lambda", dest="lam", type=_non_negative, default=settings.DEFAULT_LAMBDA,
                          help="seconds per message initiation")
    cost_cmd.add_argument("--tau", type=_non_negative, default=settings.DEFAULT_TAU, help="seconds per block")
    cost_cmd.add_argument("--tau-per-byte", type=_non_negative, default=None,
                          help="seconds per byte, converted with NB*NB*8 bytes per block")
    cost_cmd.set_defaults(handler=cmd_cost)

    sim_cmd = commands.add_parser("simulate", help="execute and verify in memory")
    problem_flags(sim_cmd, required=False)
    common_flags(sim_cmd, formats=False)
    sim_cmd.add_argument("--chain", type=_chain, default=None, metavar="RxC,RxC,...",
                         help="resize sequence, supersedes --src/--dst")
    sim_cmd.add_argument("--report", default=None, metavar="PATH", help="write the JSON run report")
    sim_cmd.add_argument("--dump-blocks", default=None, metavar="PATH", help="write a CSV dump of the final stores")
    sim_cmd.set_defaults(handler=cmd_simulate)

    sweep_cmd = commands.add_parser("sweep", help="plan many configurations")
    common_flags(sweep_cmd)
    sweep_cmd.add_argument("--config", type=_config_pair, action="append", metavar="SRC:DST")
    sweep_cmd.add_argument("--preset", choices=(analytics.NEARLY_SQUARE, analytics.SKEWED, "shrink"))
    sweep_cmd.add_argument("--table2", action="store_true", help="compare against the published send/recv counts")
    sweep_cmd.add_argument("--nblocks", type=_positive, default=None, metavar="N",
                           help="block-grid side for every row, default: smallest compatible per row")
    sweep_cmd.add_argument("--lambda", dest="lam", type=_non_negative, default=settings.DEFAULT_LAMBDA)
    sweep_cmd.add_argument("--tau", type=_non_negative, default=settings.DEFAULT_TAU)
    sweep_cmd.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        parser = build_parser()
    except ValidationError as exc:
        problems = "; ".join(f"REDISTPLAN_{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in exc.errors())
        sys.stderr.write(f"error: invalid settings: {problems}\n")
        return 2
    args = parser.parse_args(argv)
    configure_logging(args.log_level, sys.stderr)
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.error(str(exc))
    except RedistError as exc:
        logger.debug("Command failed", exc_info=True)
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
