from typing import Literal

from fastapi import APIRouter
from fastapi.responses import PlainTextResponse
import logging

import analytics
from schedule import RedistributionPlan, plan as build_plan
from schemas import CostModel, CostRequest, PlanDocument, PlanRequest, StatsModel
from topology import GridShape, make_problem
from utils.csv_export import stats_csv, transfer_csv

plans_router = APIRouter(prefix="/api", tags=["plans"])

logger = logging.getLogger(__name__)


def plan_from_request(body: PlanRequest) -> RedistributionPlan:
    problem = make_problem(GridShape.parse(body.src), GridShape.parse(body.dst), body.nblocks, body.block_size)
    logger.info(f"Planning {problem.describe()} over HTTP")
    return build_plan(problem, shifts=body.shifts)


@plans_router.post("/plan", response_model=PlanDocument)
def create_plan(body: PlanRequest, format: Literal["json", "csv"] = "json"):
    """Communication schedule as a plan document, or the C_Transfer CSV with ?format=csv"""
    plan = plan_from_request(body)
    if format == "csv":
        return PlainTextResponse(transfer_csv(plan.transfer), media_type="text/csv")
    return PlanDocument.from_plan(plan)


@plans_router.post("/stats", response_model=StatsModel)
def plan_stats(body: PlanRequest, format: Literal["json", "csv"] = "json"):
    stats = analytics.stats(plan_from_request(body))
    if format == "csv":
        return PlainTextResponse(stats_csv(stats), media_type="text/csv")
    return StatsModel.from_stats(stats)


@plans_router.post("/cost", response_model=CostModel)
def plan_cost(body: CostRequest):
    """Modeled time steps * (lambda + blocks per message * tau)"""
    plan = plan_from_request(body)
    params = analytics.CostParams(lam=body.lam, tau=body.tau)
    return CostModel(
        src=body.src,
        dst=body.dst,
        n_blocks=body.nblocks,
        steps=plan.steps,
        message_blocks=plan.message_blocks,
        lam=params.lam,
        tau=params.tau,
        modeled_cost_s=analytics.estimate_cost(plan, params),
    )
