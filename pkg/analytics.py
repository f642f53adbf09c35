"""
Schedule statistics, the lambda/tau cost model and configuration sweeps.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from config import get_settings
from errors import CostParamError, ProblemError
from schedule import RedistributionPlan, count_contentions, plan as build_plan, row_fan_in
from topology import GridShape, lcm, make_problem

logger = logging.getLogger(__name__)

BYTES_PER_ELEMENT = 8

NEARLY_SQUARE = "nearly-square"
SKEWED = "skewed"
ONE_D = "1-d"


def _grids(*shapes: tuple[int, int]) -> tuple[GridShape, ...]:
    return tuple(GridShape(rows, cols) for rows, cols in shapes)


# Published processor configurations per topology.
NEARLY_SQUARE_CONFIGS = _grids(
    (1, 2), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5),
    (5, 6), (6, 6), (5, 8), (6, 8),
)
SKEWED_CONFIGS = _grids(
    (1, 2), (2, 2), (2, 3), (2, 4), (3, 3), (2, 6), (2, 8), (2, 10), (5, 5),
    (3, 10), (2, 18), (2, 20), (2, 24), (2, 1), (3, 2), (4, 2), (6, 2),
    (8, 2), (10, 2), (10, 3), (18, 2), (20, 2), (24, 2),
)

# Shrink experiments: every source size against every smaller destination size.
SHRINK_SOURCES = (25, 40, 50)
SHRINK_TARGETS = (4, 8, 10, 25, 32)


@dataclass(frozen=True)
class CostParams:
    lam: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise CostParamError("lambda", self.lam)
        if not self.tau >= 0:
            raise CostParamError("tau", self.tau)

    @classmethod
    def from_per_byte(cls, lam: float, tau_per_byte: float, nb: int) -> "CostParams":
        """Convert a per-byte transmission time into a per-block one (NB^2 doubles)."""
        return cls(lam=lam, tau=tau_per_byte * nb * nb * BYTES_PER_ELEMENT)


@dataclass(frozen=True)
class ScheduleStats:
    steps: int
    copies: int
    sendrecvs: int
    contentions: int
    max_fan_in: int
    message_blocks: int

    @property
    def calls(self) -> int:
        return self.copies + self.sendrecvs


def stats(plan: RedistributionPlan) -> ScheduleStats:
    dest = plan.transfer.dest
    sources = np.arange(plan.transfer.sources)
    copies = int((dest == sources[None, :]).sum())
    fan_in = row_fan_in(plan.transfer)
    return ScheduleStats(
        steps=plan.steps,
        copies=copies,
        sendrecvs=plan.steps * plan.transfer.sources - copies,
        contentions=count_contentions(plan.transfer),
        max_fan_in=int(fan_in.max()) if fan_in.size else 0,
        message_blocks=plan.message_blocks,
    )


def estimate_cost(plan: RedistributionPlan, params: CostParams) -> float:
    """steps * (lambda + (N^2 / (R*C)) * tau)"""
    return plan.steps * (params.lam + plan.message_blocks * params.tau)


def expected_steps(src: GridShape, dst: GridShape) -> int:
    return lcm(src.rows, dst.rows) * lcm(src.cols, dst.cols) // src.size()


def compatible_blocks(src: GridShape, dst: GridShape) -> int:
    """Smallest block-grid side that tiles into whole superblocks."""
    return lcm(lcm(src.rows, dst.rows), lcm(src.cols, dst.cols))


# Topology helpers

def nearly_square_grid(size: int) -> GridShape:
    rows = max(d for d in range(1, math.isqrt(size) + 1) if size % d == 0)
    return GridShape(rows, size // rows)


def one_d_grid(size: int) -> GridShape:
    return GridShape(1, size)


def skewed_grid(size: int) -> GridShape:
    """The published column-skewed grid for ``size``, else the flattest non-1-D one."""
    for grid in SKEWED_CONFIGS:
        if grid.size() == size and grid.rows <= grid.cols:
            return grid
    divisors = [d for d in range(2, math.isqrt(size) + 1) if size % d == 0]
    if divisors:
        return GridShape(divisors[0], size // divisors[0])
    return one_d_grid(size)


def _is_nearly_square(grid: GridShape) -> bool:
    square = nearly_square_grid(grid.size())
    return grid in (square, GridShape(square.cols, square.rows))


def grid_topology(grid: GridShape) -> str:
    if grid.rows == 1 or grid.cols == 1:
        return ONE_D
    return NEARLY_SQUARE if _is_nearly_square(grid) else SKEWED


def classify_topology(src: GridShape, dst: GridShape) -> str:
    """1-d when both grids are a single row or column; 1x2 still counts as nearly square next to 2x2."""
    labels = {grid_topology(src), grid_topology(dst)}
    if labels == {ONE_D}:
        return ONE_D
    if _is_nearly_square(src) and _is_nearly_square(dst):
        return NEARLY_SQUARE
    return SKEWED


# Comparison call counts

# Published (ours, caterpillar) totals for the two expansion experiments.
PUBLISHED_CALL_COUNTS = {(8, 40): (80, 160), (8, 50): (196, 392)}


def our_call_count(p: int, q: int) -> int:
    """Communication calls (copies included) of the nearly-square p -> q schedule."""
    src, dst = nearly_square_grid(p), nearly_square_grid(q)
    return stats(build_plan(make_problem(src, dst, compatible_blocks(src, dst)))).calls


def caterpillar_call_count(p: int, q: int) -> int:
    """
    Calls issued by a caterpillar exchange over max(p, q) participants.

    The caterpillar pairs each sender with each receiver in turn and posts a
    send and a matching receive per pairing, twice the calls of our schedule.
    """
    if p < 1 or q < 1:
        raise ValueError(f"processor counts must be positive, got ({p}, {q})")
    return 2 * our_call_count(p, q)


@dataclass(frozen=True)
class CallCountComparison:
    p: int
    q: int
    ours: int
    caterpillar: int
    published_ours: int
    published_caterpillar: int

    @property
    def verdict(self) -> str:
        published = (self.published_ours, self.published_caterpillar)
        return "MATCH" if (self.ours, self.caterpillar) == published else "DIVERGE"


def compare_call_counts(published: Optional[dict] = None) -> list[CallCountComparison]:
    comparisons = []
    for (p, q), (ours, caterpillar) in (published or PUBLISHED_CALL_COUNTS).items():
        comparison = CallCountComparison(
            p=p,
            q=q,
            ours=our_call_count(p, q),
            caterpillar=caterpillar_call_count(p, q),
            published_ours=ours,
            published_caterpillar=caterpillar,
        )
        if comparison.verdict != "MATCH":
            logger.info(
                f"Call counts {p} -> {q}: computed {comparison.ours}/{comparison.caterpillar}, "
                f"published {ours}/{caterpillar}"
            )
        comparisons.append(comparison)
    return comparisons


# Sweeps

@dataclass(frozen=True)
class SweepRow:
    src: GridShape
    dst: GridShape
    topology: str
    n_blocks: Optional[int] = None
    stats: Optional[ScheduleStats] = None
    modeled_cost_s: Optional[float] = None
    contention_free: bool = False
    error: Optional[str] = None


def _sweep_row(src: GridShape, dst: GridShape, n_blocks: Optional[int], params: CostParams, shifts: bool) -> SweepRow:
    topology = classify_topology(src, dst)
    side = n_blocks if n_blocks is not None else compatible_blocks(src, dst)
    try:
        row_plan = build_plan(make_problem(src, dst, side), shifts=shifts)
    except ProblemError as exc:
        logger.warning(f"Sweep row {src} -> {dst} skipped: {exc}")
        return SweepRow(src=src, dst=dst, topology=topology, n_blocks=side, error=str(exc))
    row_stats = stats(row_plan)
    return SweepRow(
        src=src,
        dst=dst,
        topology=topology,
        n_blocks=side,
        stats=row_stats,
        modeled_cost_s=estimate_cost(row_plan, params),
        contention_free=row_stats.contentions == 0,
    )


def sweep(
    configs: Iterable[tuple[GridShape, GridShape]],
    n_blocks: Optional[int] = None,
    params: CostParams = CostParams(),
    max_workers: Optional[int] = None,
    shifts: bool = True,
) -> list[SweepRow]:
    """
    Plan every configuration, rows in input order.

    ``n_blocks=None`` picks the smallest compatible block-grid side per row.
    Invalid rows carry their error and the sweep continues.
    """
    configs = list(configs)
    workers = max_workers or get_settings().MAX_WORKERS
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda pair: _sweep_row(pair[0], pair[1], n_blocks, params, shifts), configs))
    logger.info(f"Swept {len(rows)} configurations, {sum(1 for row in rows if row.error)} invalid")
    return rows


def expansion_chain(preset: str) -> list[tuple[GridShape, GridShape]]:
    """Consecutive configuration pairs of a published sweep."""
    if preset == NEARLY_SQUARE:
        grids = NEARLY_SQUARE_CONFIGS
        return list(zip(grids, grids[1:]))
    if preset == SKEWED:
        grids = [grid for grid in SKEWED_CONFIGS if grid.rows <= grid.cols]
        return list(zip(grids, grids[1:]))
    if preset == "shrink":
        return [
            (nearly_square_grid(p), nearly_square_grid(q))
            for p in SHRINK_SOURCES
            for q in SHRINK_TARGETS
            if q < p
        ]
    raise ValueError(f"unknown sweep preset {preset!r}")


# Published send/recv counts

@dataclass(frozen=True)
class PublishedRow:
    p: int
    q: int
    steps: int
    skewed_steps: int
    nearly_square: tuple[int, int]
    one_d: tuple[int, int]
    skewed: tuple[int, int]


TABLE2_ROWS = (
    PublishedRow(2, 4, 2, 2, (2, 2), (2, 2), (2, 2)),
    PublishedRow(4, 6, 3, 3, (3, 9), (4, 8), (3, 9)),
    PublishedRow(4, 8, 2, 2, (2, 6), (4, 4), (2, 6)),
    PublishedRow(6, 9, 3, 3, (6, 12), (6, 12), (3, 15)),
    PublishedRow(8, 16, 2, 2, (8, 8), (8, 8), (4, 12)),
    PublishedRow(9, 12, 4, 4, (6, 30), (9, 27), (3, 33)),
    PublishedRow(12, 16, 4, 4, (12, 36), (12, 36), (12, 36)),
    PublishedRow(16, 20, 5, 5, (10, 70), (16, 64), (16, 64)),
    PublishedRow(20, 25, 5, 5, (20, 80), (20, 80), (5, 95)),
    PublishedRow(25, 30, 6, 6, (15, 135), (25, 125), (4, 146)),
    PublishedRow(25, 40, 8, 8, (7, 193), (20, 180), (25, 175)),
    PublishedRow(30, 36, 6, 6, (30, 150), (30, 150), (15, 525)),
    PublishedRow(36, 48, 4, 4, (12, 132), (36, 108), (36, 108)),
    PublishedRow(4, 20, 10, 5, (2, 38), (4, 36), (2, 18)),
    PublishedRow(8, 40, 10, 5, (8, 72), (8, 72), (4, 36)),
    PublishedRow(8, 50, 25, 25, (8, 192), (8, 192), (8, 192)),
)


@dataclass(frozen=True)
class Table2Comparison:
    p: int
    q: int
    topology: str
    src: GridShape
    dst: GridShape
    computed: Optional[ScheduleStats]
    published_steps: int
    published_copies: int
    published_sendrecvs: int
    error: Optional[str] = None

    @property
    def verdict(self) -> str:
        if self.computed is None:
            return "ERROR"
        ours = (self.computed.steps, self.computed.copies, self.computed.sendrecvs)
        return "MATCH" if ours == (self.published_steps, self.published_copies, self.published_sendrecvs) else "DIVERGE"


def _table2_grids(topology: str, size: int) -> GridShape:
    if topology == NEARLY_SQUARE:
        return nearly_square_grid(size)
    if topology == ONE_D:
        return one_d_grid(size)
    return skewed_grid(size)


def compare_table2(rows: Sequence[PublishedRow] = TABLE2_ROWS) -> list[Table2Comparison]:
    """Computed vs published counts for every row and topology."""
    comparisons = []
    for row in rows:
        for topology, published in ((NEARLY_SQUARE, row.nearly_square), (ONE_D, row.one_d), (SKEWED, row.skewed)):
            src, dst = _table2_grids(topology, row.p), _table2_grids(topology, row.q)
            published_steps = row.skewed_steps if topology == SKEWED else row.steps
            computed = None
            error = None
            try:
                computed = stats(build_plan(make_problem(src, dst, compatible_blocks(src, dst))))
            except ProblemError as exc:
                error = str(exc)
            comparison = Table2Comparison(
                p=row.p,
                q=row.q,
                topology=topology,
                src=src,
                dst=dst,
                computed=computed,
                published_steps=published_steps,
                published_copies=published[0],
                published_sendrecvs=published[1],
                error=error,
            )
            if comparison.verdict != "MATCH":
                logger.info(f"Published row ({row.p}, {row.q}) {topology}: {comparison.verdict}")
            comparisons.append(comparison)
    return comparisons
