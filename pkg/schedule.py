"""
Superblock geometry and communication schedules.

Pipeline: superblock dims -> Layout -> IDPC / FDPC -> C_Transfer, and when the
raw schedule sends two messages to one destination in the same step, circular
shifts of PM (a copy of FDPC), IDPC and every Layout table before C_Transfer is
rebuilt. C_Recv exists only for contention-free schedules.
"""
from dataclasses import dataclass
from enum import Enum
import logging
from typing import NamedTuple, Optional

import numpy as np

from errors import ColumnOverflow, ContentionPresent
from topology import GridShape, RedistProblem, lcm, validate

logger = logging.getLogger(__name__)


class ShiftCase(str, Enum):
    NONE = "none"
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"


class OwnerRole(str, Enum):
    IDPC = "IDPC"
    FDPC = "FDPC"
    PM = "PM"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SuperblockDims:
    R: int
    C: int
    sup_r: int
    sup_c: int

    @property
    def sup(self) -> int:
        return self.sup_r * self.sup_c

    @property
    def cells(self) -> int:
        return self.R * self.C


@dataclass(frozen=True, eq=False)
class LayoutArray:
    """``tables[s, i, j]`` is the global (x, y) of the block at (i, j) of superblock s."""

    tables: np.ndarray

    def __len__(self) -> int:
        return self.tables.shape[0]

    def table(self, s: int) -> np.ndarray:
        return self.tables[s]

    def block_at(self, s: int, i: int, j: int) -> tuple[int, int]:
        x, y = self.tables[s, i, j]
        return int(x), int(y)


@dataclass(frozen=True, eq=False)
class OwnerTable:
    cells: np.ndarray
    role: OwnerRole

    @property
    def dims(self) -> tuple[int, int]:
        return self.cells.shape

    def as_role(self, role: OwnerRole) -> "OwnerTable":
        return OwnerTable(_frozen(self.cells.copy()), role)


@dataclass(frozen=True, eq=False)
class TransferTable:
    """
    C_Transfer plus its coordinate companion.

    ``dest[t, k]`` is the pid source k sends to in step t and ``coords[t, k]``
    the in-superblock position (i, j) of the Layout tables that entry carries.
    """

    dest: np.ndarray
    coords: np.ndarray

    @property
    def steps(self) -> int:
        return self.dest.shape[0]

    @property
    def sources(self) -> int:
        return self.dest.shape[1]

    def entry(self, step: int, pid: int) -> tuple[int, tuple[int, int]]:
        i, j = self.coords[step, pid]
        return int(self.dest[step, pid]), (int(i), int(j))


@dataclass(frozen=True, eq=False)
class RecvTable:
    cells: np.ndarray

    @property
    def steps(self) -> int:
        return self.cells.shape[0]


@dataclass(frozen=True, eq=False)
class RedistributionPlan:
    problem: RedistProblem
    dims: SuperblockDims
    layout: LayoutArray
    idpc: OwnerTable
    pm: OwnerTable
    transfer: TransferTable
    recv: Optional[RecvTable]
    shift_case: ShiftCase
    contentions_before: int
    contentions_after: int
    shifted: bool = False

    @property
    def steps(self) -> int:
        return self.transfer.steps

    @property
    def message_blocks(self) -> int:
        return self.problem.n_blocks ** 2 // self.dims.cells

    def message_coords(self, step: int, pid: int) -> list[tuple[int, int]]:
        """Blocks source ``pid`` sends in ``step``, one per superblock in row-major order."""
        i, j = self.transfer.coords[step, pid]
        return [(int(x), int(y)) for x, y in self.layout.tables[:, i, j]]


class ShiftedTables(NamedTuple):
    pm: OwnerTable
    idpc: OwnerTable
    layout: LayoutArray


def compute_superblock(problem: RedistProblem) -> SuperblockDims:
    R = lcm(problem.src.rows, problem.dst.rows)
    C = lcm(problem.src.cols, problem.dst.cols)
    return SuperblockDims(R=R, C=C, sup_r=problem.n_blocks // R, sup_c=problem.n_blocks // C)


def build_layout(problem: RedistProblem, dims: SuperblockDims) -> LayoutArray:
    """
    Fill one R x C table per superblock, superblocks visited row-major.

    Within a superblock the traversal walks (R/P_r) x (C/P_c) tiles of P_r x P_c
    blocks; tile (i, j), offset (k, l) is relative position
    (i * P_r + k, j * P_c + l). That walk visits every cell once at its own
    position, so the relative table is the identity. Every superblock shares it
    and differs only by its (sup_row * R, sup_col * C) origin.
    """
    relative = np.stack(np.indices((dims.R, dims.C), dtype=np.int64), axis=-1)

    sup_row, sup_col = np.divmod(np.arange(dims.sup), dims.sup_c)
    origins = np.stack([sup_row * dims.R, sup_col * dims.C], axis=-1)
    tables = relative[None, :, :, :] + origins[:, None, None, :]
    return LayoutArray(_frozen(tables))


def _owner_cells(dims: SuperblockDims, grid: GridShape) -> np.ndarray:
    i = np.arange(dims.R)[:, None]
    j = np.arange(dims.C)[None, :]
    return _frozen(grid.cols * (i % grid.rows) + (j % grid.cols))


def build_idpc(dims: SuperblockDims, p: GridShape) -> OwnerTable:
    return OwnerTable(_owner_cells(dims, p), OwnerRole.IDPC)


def build_fdpc(dims: SuperblockDims, q: GridShape) -> OwnerTable:
    return OwnerTable(_owner_cells(dims, q), OwnerRole.FDPC)


def build_transfer(idpc: OwnerTable, pm: OwnerTable, p: GridShape) -> TransferTable:
    """
    Re-order PM into C_Transfer.

    Cells are visited row-major; each lands in the column of its IDPC owner at
    that column's next free row.
    """
    if idpc.dims != pm.dims:
        raise ValueError(f"IDPC {idpc.dims} and {pm.role.value} {pm.dims} must share dimensions")
    R, C = idpc.dims
    sources = p.size()
    steps = (R * C) // sources

    dest = np.full((steps, sources), -1, dtype=np.int64)
    coords = np.full((steps, sources, 2), -1, dtype=np.int64)
    counters = np.zeros(sources, dtype=np.int64)
    for i in range(R):
        for j in range(C):
            pid = int(idpc.cells[i, j])
            row = int(counters[pid])
            if row >= steps:
                raise ColumnOverflow(pid, steps, row + 1)
            dest[row, pid] = pm.cells[i, j]
            coords[row, pid] = (i, j)
            counters[pid] += 1

    short = np.flatnonzero(counters != steps)
    if short.size:
        pid = int(short[0])
        raise ColumnOverflow(pid, steps, int(counters[pid]))
    return TransferTable(_frozen(dest), _frozen(coords))


def build_recv(transfer: TransferTable, q: GridShape) -> RecvTable:
    """Invert each C_Transfer row; destinations idle in a step keep -1."""
    cells = np.full((transfer.steps, q.size()), -1, dtype=np.int64)
    for step in range(transfer.steps):
        for pid in range(transfer.sources):
            target = int(transfer.dest[step, pid])
            if cells[step, target] != -1:
                raise ContentionPresent(step, target)
            cells[step, target] = pid
    return RecvTable(_frozen(cells))


def row_fan_in(transfer: TransferTable) -> np.ndarray:
    """Per step, how many messages the busiest destination receives."""
    if transfer.steps == 0:
        return np.zeros(0, dtype=np.int64)
    return np.array([np.bincount(row).max() for row in transfer.dest], dtype=np.int64)


def count_contentions(transfer: TransferTable) -> int:
    """Sum over steps and destinations of the surplus messages, max(multiplicity - 1, 0)."""
    total = 0
    for row in transfer.dest:
        total += row.size - np.unique(row).size
    return int(total)


def select_shift_case(p: GridShape, q: GridShape) -> ShiftCase:
    # Case 1 and Case 2 also cover the equal-dimension gaps (P_c == Q_c, P_r == Q_r).
    rows_shrink = p.rows > q.rows
    cols_shrink = p.cols > q.cols
    if rows_shrink and cols_shrink:
        return ShiftCase.CASE3
    if rows_shrink:
        return ShiftCase.CASE1
    if cols_shrink:
        return ShiftCase.CASE2
    return ShiftCase.NONE


def _shift_origins(case: ShiftCase, R: int, C: int, p: GridShape) -> tuple[np.ndarray, np.ndarray]:
    """
    For each cell of a shifted R x C table, the (row, col) it was taken from.

    Columns j % P_c != 0 rotate down by (P_r * (j % P_c)) mod R; rows i % P_r != 0
    rotate right by (P_c * (i % P_r)) mod C. Case 3 applies the column pass first.
    """
    rows, cols = np.indices((R, C))
    if case in (ShiftCase.CASE2, ShiftCase.CASE3):
        for c in range(C):
            amount = (p.rows * (c % p.cols)) % R
            if amount:
                rows[:, c] = np.roll(rows[:, c], amount)
                cols[:, c] = np.roll(cols[:, c], amount)
    if case in (ShiftCase.CASE1, ShiftCase.CASE3):
        for r in range(R):
            amount = (p.cols * (r % p.rows)) % C
            if amount:
                rows[r] = np.roll(rows[r], amount)
                cols[r] = np.roll(cols[r], amount)
    return rows, cols


def apply_shifts(case: ShiftCase, p: GridShape, pm: OwnerTable, idpc: OwnerTable, layout: LayoutArray) -> ShiftedTables:
    """Apply one cell permutation to PM, IDPC and every Layout table."""
    if case is ShiftCase.NONE:
        raise ValueError("apply_shifts needs a contention case, got none")
    R, C = pm.dims
    rows, cols = _shift_origins(case, R, C, p)
    return ShiftedTables(
        pm=OwnerTable(_frozen(pm.cells[rows, cols]), pm.role),
        idpc=OwnerTable(_frozen(idpc.cells[rows, cols]), idpc.role),
        layout=LayoutArray(_frozen(layout.tables[:, rows, cols])),
    )


def plan(problem: RedistProblem, shifts: bool = True) -> RedistributionPlan:
    """
    Build the communication schedule for one redistribution.

    When the raw schedule has node contention the selected shift case is
    recorded; with ``shifts`` enabled the shifted tables replace the raw ones
    unless they would add contention.
    """
    problem = validate(problem)
    p, q = problem.src, problem.dst
    dims = compute_superblock(problem)
    layout = build_layout(problem, dims)
    idpc = build_idpc(dims, p)
    fdpc = build_fdpc(dims, q)
    transfer = build_transfer(idpc, fdpc, p)
    before = count_contentions(transfer)

    pm = fdpc
    after = before
    case = ShiftCase.NONE
    shifted = False
    if before:
        case = select_shift_case(p, q)
        logger.info(f"{problem.describe()}: {before} contentions, shift {case.value}")
        if shifts and case is not ShiftCase.NONE:
            tables = apply_shifts(case, p, fdpc.as_role(OwnerRole.PM), idpc, layout)
            candidate = build_transfer(tables.idpc, tables.pm, p)
            candidate_count = count_contentions(candidate)
            if candidate_count <= before:
                pm, idpc, layout = tables.pm, tables.idpc, tables.layout
                transfer = candidate
                after = candidate_count
                shifted = True
            else:
                logger.warning(
                    f"{problem.describe()}: {case.value} shifts raise contention "
                    f"{before} -> {candidate_count}, keeping the raw schedule"
                )
        if after:
            logger.warning(f"{problem.describe()}: {after} contentions remain")

    recv = build_recv(transfer, q) if after == 0 else None
    logger.info(f"Planned {problem.describe()}: {transfer.steps} steps, R={dims.R}, C={dims.C}")
    return RedistributionPlan(
        problem=problem,
        dims=dims,
        layout=layout,
        idpc=idpc,
        pm=pm,
        transfer=transfer,
        recv=recv,
        shift_case=case,
        contentions_before=before,
        contentions_after=after,
        shifted=shifted,
    )
