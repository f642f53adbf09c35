from typing import List

from fastapi import APIRouter

import analytics
from schemas import SweepRequest, SweepRowModel, Table2Model
from topology import GridShape

sweeps_router = APIRouter(prefix="/api", tags=["sweeps"])


@sweeps_router.post("/sweep", response_model=List[SweepRowModel])
def run_sweep(body: SweepRequest):
    configs = [(GridShape.parse(src), GridShape.parse(dst)) for src, dst in body.configs]
    params = analytics.CostParams(lam=body.lam, tau=body.tau)
    rows = analytics.sweep(configs, n_blocks=body.nblocks, params=params)
    return [SweepRowModel.from_row(row) for row in rows]


@sweeps_router.get("/table2", response_model=List[Table2Model])
def table2():
    """Computed copy and send/recv counts next to the published ones"""
    return [Table2Model.from_comparison(row) for row in analytics.compare_table2()]
