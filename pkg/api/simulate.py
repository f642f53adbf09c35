from fastapi import APIRouter, HTTPException, status
import logging

import redistribute
from config import get_settings
from schemas import RunReport, SimulateRequest
from topology import BlockDesc, GridShape

simulate_router = APIRouter(prefix="/api", tags=["simulate"])

logger = logging.getLogger(__name__)


@simulate_router.post("/simulate", response_model=RunReport)
def simulate(body: SimulateRequest):
    """
    Execute and verify a resize chain in memory.

    Runs in the threadpool since the engine drives its own event loop.
    """
    desc = BlockDesc.from_blocks(body.nblocks, body.block_size)
    limit = get_settings().MAX_SIM_BLOCKS
    if desc.total_blocks > limit:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=f"{desc.total_blocks} blocks exceed the simulation limit of {limit}",
        )
    grids = [GridShape.parse(item) for item in body.chain]
    session = redistribute.resize_session(grids, desc)
    if not session.passed:
        logger.error(f"Simulated chain {' -> '.join(body.chain)} failed verification")
    return RunReport.from_session(session, desc)
