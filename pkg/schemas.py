from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from analytics import ScheduleStats, SweepRow, Table2Comparison
from config import TOOL_VERSION
from errors import PlanDocumentError
from redistribute import HopReport, SessionReport, VerificationReport
from schedule import (
    OwnerRole,
    RecvTable,
    RedistributionPlan,
    ShiftCase,
    TransferTable,
    apply_shifts,
    build_fdpc,
    build_idpc,
    build_layout,
    build_transfer,
    compute_superblock,
)
from topology import BlockDesc, GridShape, RedistProblem, validate

PLAN_FORMAT_VERSION = "redistplan-plan/1"
REPORT_FORMAT_VERSION = "redistplan-report/1"


def _frozen_array(rows) -> np.ndarray:
    array = np.asarray(rows, dtype=np.int64)
    array.setflags(write=False)
    return array


class ProblemModel(BaseModel):
    src: str
    dst: str
    n: int
    nb: int

    def to_problem(self) -> RedistProblem:
        return validate(RedistProblem(GridShape.parse(self.src), GridShape.parse(self.dst), BlockDesc(self.n, self.nb)))


class DimsModel(BaseModel):
    R: int
    C: int
    sup: int


class ContentionModel(BaseModel):
    before: int
    after: int


class PlanDocument(BaseModel):
    """Canonical interchange form of a RedistributionPlan."""

    version: str = PLAN_FORMAT_VERSION
    generator: str = f"redistplan {TOOL_VERSION}"
    problem: ProblemModel
    dims: DimsModel
    shift_case: ShiftCase
    shifted: bool
    contentions: ContentionModel
    transfer: List[List[int]]
    coords: List[List[List[int]]]
    recv: Optional[List[List[int]]] = None

    @classmethod
    def from_plan(cls, plan: RedistributionPlan) -> "PlanDocument":
        problem = plan.problem
        return cls(
            problem=ProblemModel(src=str(problem.src), dst=str(problem.dst), n=problem.blocks.n, nb=problem.blocks.nb),
            dims=DimsModel(R=plan.dims.R, C=plan.dims.C, sup=plan.dims.sup),
            shift_case=plan.shift_case,
            shifted=plan.shifted,
            contentions=ContentionModel(before=plan.contentions_before, after=plan.contentions_after),
            transfer=plan.transfer.dest.tolist(),
            coords=plan.transfer.coords.tolist(),
            recv=plan.recv.cells.tolist() if plan.recv is not None else None,
        )

    def to_plan(self) -> RedistributionPlan:
        """
        Rebuild the plan, re-deriving Layout / IDPC / PM from the problem.

        The stored C_Transfer must equal the one the rebuilt tables produce.
        """
        if self.version != PLAN_FORMAT_VERSION:
            raise PlanDocumentError(f"unsupported plan document version {self.version!r}")
        problem = self.problem.to_problem()
        dims = compute_superblock(problem)
        if (dims.R, dims.C, dims.sup) != (self.dims.R, self.dims.C, self.dims.sup):
            raise PlanDocumentError(f"superblock dims {self.dims} disagree with problem {problem.describe()}")

        layout = build_layout(problem, dims)
        idpc = build_idpc(dims, problem.src)
        pm = build_fdpc(dims, problem.dst)
        if self.shifted:
            if self.shift_case is ShiftCase.NONE:
                raise PlanDocumentError("document is marked shifted but names no shift case")
            tables = apply_shifts(self.shift_case, problem.src, pm.as_role(OwnerRole.PM), idpc, layout)
            layout, idpc, pm = tables.layout, tables.idpc, tables.pm

        transfer = TransferTable(_frozen_array(self.transfer), _frozen_array(self.coords))
        rebuilt = build_transfer(idpc, pm, problem.src)
        if not (np.array_equal(rebuilt.dest, transfer.dest) and np.array_equal(rebuilt.coords, transfer.coords)):
            raise PlanDocumentError(f"transfer table does not match the schedule of {problem.describe()}")

        return RedistributionPlan(
            problem=problem,
            dims=dims,
            layout=layout,
            idpc=idpc,
            pm=pm,
            transfer=transfer,
            recv=RecvTable(_frozen_array(self.recv)) if self.recv is not None else None,
            shift_case=self.shift_case,
            contentions_before=self.contentions.before,
            contentions_after=self.contentions.after,
            shifted=self.shifted,
        )


class StatsModel(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    steps: int
    copies: int
    sendrecvs: int
    contentions: int
    max_fan_in: int
    message_blocks: int

    @classmethod
    def from_stats(cls, stats: ScheduleStats) -> "StatsModel":
        return cls.model_validate(stats)


class CostModel(BaseModel):
    src: str
    dst: str
    n_blocks: int
    steps: int
    message_blocks: int
    lam: float
    tau: float
    modeled_cost_s: float


class MismatchModel(BaseModel):
    coord: List[int]
    reason: str
    expected_pid: int
    found_pid: Optional[int] = None


class VerificationModel(BaseModel):
    passed: bool
    blocks_checked: int
    mismatch_count: int
    mismatches: List[MismatchModel]
    count_errors: dict[int, int]

    @classmethod
    def from_report(cls, report: VerificationReport) -> "VerificationModel":
        return cls(
            passed=report.passed,
            blocks_checked=report.blocks_checked,
            mismatch_count=report.mismatch_count,
            mismatches=[
                MismatchModel(coord=list(m.coord), reason=m.reason, expected_pid=m.expected_pid, found_pid=m.found_pid)
                for m in report.mismatches
            ],
            count_errors=report.count_errors,
        )


class HopModel(BaseModel):
    hop: int
    src: str
    dst: str
    shift_case: str
    contentions_before: int
    contentions_after: int
    max_step_fan_in: int
    stats: StatsModel
    verification: VerificationModel

    @classmethod
    def from_hop(cls, hop: HopReport) -> "HopModel":
        return cls(
            hop=hop.hop,
            src=str(hop.src),
            dst=str(hop.dst),
            shift_case=hop.shift_case,
            contentions_before=hop.contentions_before,
            contentions_after=hop.contentions_after,
            max_step_fan_in=hop.max_step_fan_in,
            stats=StatsModel.from_stats(hop.stats),
            verification=VerificationModel.from_report(hop.verification),
        )


class RunReport(BaseModel):
    version: str = REPORT_FORMAT_VERSION
    generator: str = f"redistplan {TOOL_VERSION}"
    n_blocks: int
    nb: int
    passed: bool
    hops: List[HopModel]

    @classmethod
    def from_session(cls, session: SessionReport, desc: BlockDesc) -> "RunReport":
        return cls(
            n_blocks=desc.N,
            nb=desc.nb,
            passed=session.passed,
            hops=[HopModel.from_hop(hop) for hop in session.hops],
        )


class SweepRowModel(BaseModel):
    src: str
    dst: str
    topology: str
    n_blocks: Optional[int] = None
    stats: Optional[StatsModel] = None
    modeled_cost_s: Optional[float] = None
    contention_free: bool = False
    error: Optional[str] = None

    @classmethod
    def from_row(cls, row: SweepRow) -> "SweepRowModel":
        return cls(
            src=str(row.src),
            dst=str(row.dst),
            topology=row.topology,
            n_blocks=row.n_blocks,
            stats=StatsModel.from_stats(row.stats) if row.stats else None,
            modeled_cost_s=row.modeled_cost_s,
            contention_free=row.contention_free,
            error=row.error,
        )


class Table2Model(BaseModel):
    p: int
    q: int
    topology: str
    src: str
    dst: str
    steps: Optional[int] = None
    copies: Optional[int] = None
    sendrecvs: Optional[int] = None
    published_steps: int
    published_copies: int
    published_sendrecvs: int
    verdict: str

    @classmethod
    def from_comparison(cls, row: Table2Comparison) -> "Table2Model":
        computed = row.computed
        return cls(
            p=row.p,
            q=row.q,
            topology=row.topology,
            src=str(row.src),
            dst=str(row.dst),
            steps=computed.steps if computed else None,
            copies=computed.copies if computed else None,
            sendrecvs=computed.sendrecvs if computed else None,
            published_steps=row.published_steps,
            published_copies=row.published_copies,
            published_sendrecvs=row.published_sendrecvs,
            verdict=row.verdict,
        )


# HTTP request bodies

class PlanRequest(BaseModel):
    src: str = Field(..., examples=["2x2"])
    dst: str = Field(..., examples=["3x4"])
    nblocks: int = Field(..., gt=0)
    block_size: int = Field(1, gt=0)
    shifts: bool = True

    @field_validator("src", "dst")
    @classmethod
    def grid_string(cls, value: str) -> str:
        return str(GridShape.parse(value))


class CostRequest(PlanRequest):
    lam: float = Field(0.0, ge=0)
    tau: float = Field(0.0, ge=0)


class SimulateRequest(BaseModel):
    chain: List[str] = Field(..., min_length=1, examples=[["2x2", "3x4", "2x2"]])
    nblocks: int = Field(..., gt=0)
    block_size: int = Field(1, gt=0)

    @field_validator("chain")
    @classmethod
    def grid_strings(cls, value: List[str]) -> List[str]:
        return [str(GridShape.parse(item)) for item in value]


class SweepRequest(BaseModel):
    configs: List[List[str]] = Field(..., examples=[[["2x2", "4x5"], ["2x2", "2x10"]]])
    nblocks: Optional[int] = Field(None, gt=0)
    lam: float = Field(0.0, ge=0)
    tau: float = Field(0.0, ge=0)

    @field_validator("configs")
    @classmethod
    def grid_pairs(cls, value: List[List[str]]) -> List[List[str]]:
        pairs = []
        for pair in value:
            if len(pair) != 2:
                raise ValueError(f"each config needs a source and a destination grid, got {pair}")
            pairs.append([str(GridShape.parse(item)) for item in pair])
        return pairs
