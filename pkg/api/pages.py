from pathlib import Path
from typing import Optional

from fastapi import APIRouter, Form, Request
from fastapi.responses import HTMLResponse
from fastapi.templating import Jinja2Templates
import logging

import analytics
from config import get_settings
from errors import RedistError
from schedule import plan as build_plan
from topology import GridShape, make_problem

pages_router = APIRouter(tags=["pages"])

logger = logging.getLogger(__name__)

templates = Jinja2Templates(directory=str(Path(__file__).resolve().parent.parent / "templates"))


@pages_router.get("/", response_class=HTMLResponse)
async def index(request: Request):
    return templates.TemplateResponse(request, "index.html", {"app_name": get_settings().APP_NAME})


@pages_router.post("/ui/plan", response_class=HTMLResponse)
def plan_fragment(
    request: Request,
    src: str = Form(...),
    dst: str = Form(...),
    nblocks: int = Form(...),
    block_size: int = Form(1),
    shifts: Optional[str] = Form(None),
):
    """htmx fragment with the C_Transfer and C_Recv tables"""
    try:
        problem = make_problem(GridShape.parse(src), GridShape.parse(dst), nblocks, block_size)
        plan = build_plan(problem, shifts=shifts is not None)
    except RedistError as e:
        logger.warning(f"UI plan request rejected: {e}")
        return templates.TemplateResponse(request, "partials/schedule.html", {"error": str(e)})

    transfer = [
        [plan.transfer.entry(step, pid) for pid in range(plan.transfer.sources)]
        for step in range(plan.steps)
    ]
    recv = plan.recv.cells.tolist() if plan.recv is not None else None
    return templates.TemplateResponse(
        request,
        "partials/schedule.html",
        {
            "problem": problem.describe(),
            "plan": plan,
            "stats": analytics.stats(plan),
            "transfer": transfer,
            "recv": recv,
        },
    )
