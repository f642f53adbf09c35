"""
In-memory execution of redistribution plans.

A synthetic matrix is dealt block-cyclically onto the source grid, every
schedule step packs one message per source, self-copies skip the transport,
and receivers unpack after a barrier. ``verify`` re-derives ownership from
first principles to judge the result.
"""
import asyncio
from dataclasses import dataclass, field
import logging
from itertools import pairwise
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

import analytics
from errors import (
    DivisibilityError,
    DuplicateDelivery,
    DuplicateSlot,
    ExecutionError,
    HopError,
    MissingBlock,
    ProblemError,
    WrongDestination,
)
from schedule import RedistributionPlan, SuperblockDims, plan as build_plan
from topology import BlockDesc, GridShape, RedistProblem, dest_owner, validate

logger = logging.getLogger(__name__)

Coord = tuple[int, int]
BlockFill = Callable[[int, int, int], np.ndarray]

MAX_REPORTED_MISMATCHES = 10


def default_fill(x: int, y: int, nb: int) -> np.ndarray:
    """Element e of block (x, y) is x*10^6 + y*10^3 + e."""
    return x * 1_000_000.0 + y * 1_000.0 + np.arange(nb * nb, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Block:
    coord: Coord
    payload: np.ndarray

    def same_as(self, other: "Block") -> bool:
        return self.coord == other.coord and np.array_equal(self.payload, other.payload)


@dataclass(eq=False)
class LocalStore:
    """One processor's blocks, keyed by local slot (x // rows, y // cols)."""

    pid: int
    grid: GridShape
    n_blocks: int
    blocks: dict[Coord, Block] = field(default_factory=dict)

    @property
    def capacity(self) -> int:
        return self.n_blocks ** 2 // self.grid.size()

    def slot_of(self, coord: Coord) -> Coord:
        x, y = coord
        return x // self.grid.rows, y // self.grid.cols

    def get(self, coord: Coord) -> Optional[Block]:
        block = self.blocks.get(self.slot_of(coord))
        if block is None or block.coord != coord:
            return None
        return block

    def put(self, block: Block) -> Coord:
        slot = self.slot_of(block.coord)
        if slot in self.blocks:
            raise DuplicateSlot(self.pid, slot, block.coord)
        self.blocks[slot] = block
        return slot

    def __len__(self) -> int:
        return len(self.blocks)

    def same_contents(self, other: "LocalStore") -> bool:
        if (self.pid, self.grid, self.n_blocks) != (other.pid, other.grid, other.n_blocks):
            return False
        if self.blocks.keys() != other.blocks.keys():
            return False
        return all(block.same_as(other.blocks[slot]) for slot, block in self.blocks.items())


@dataclass(frozen=True)
class Message:
    step: int
    src: int
    dst: int
    blocks: tuple[Block, ...]

    @property
    def is_copy(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class StepTrace:
    step: int
    copies: int
    sends: int
    blocks_moved: int
    deliveries: tuple[int, ...]

    @property
    def max_fan_in(self) -> int:
        return max(self.deliveries, default=0)


@dataclass
class ExecutionResult:
    stores: list[LocalStore]
    steps: list[StepTrace]

    @property
    def copies(self) -> int:
        return sum(trace.copies for trace in self.steps)

    @property
    def sends(self) -> int:
        return sum(trace.sends for trace in self.steps)

    @property
    def blocks_moved(self) -> int:
        return sum(trace.blocks_moved for trace in self.steps)


@dataclass(frozen=True)
class Mismatch:
    coord: Coord
    reason: str
    expected_pid: int
    found_pid: Optional[int] = None


@dataclass
class VerificationReport:
    passed: bool
    blocks_checked: int
    mismatch_count: int
    mismatches: list[Mismatch]
    count_errors: dict[int, int]


@dataclass
class HopReport:
    hop: int
    src: GridShape
    dst: GridShape
    stats: "analytics.ScheduleStats"
    shift_case: str
    contentions_before: int
    contentions_after: int
    max_step_fan_in: int
    verification: VerificationReport


@dataclass
class SessionReport:
    hops: list[HopReport]
    stores: list[LocalStore]

    @property
    def passed(self) -> bool:
        return all(hop.verification.passed for hop in self.hops)


def packed_offset(coord: Coord, dims: SuperblockDims, grid: GridShape) -> int:
    """
    Position of a block in a destination's superblock-major local array.

    Each destination owns (R/Q_r) * (C/Q_c) blocks of every superblock, so blocks
    of one message land that many positions apart.
    """
    x, y = coord
    per_row = dims.C // grid.cols
    per_superblock = (dims.R // grid.rows) * per_row
    superblock = (x // dims.R) * dims.sup_c + (y // dims.C)
    i, j = x % dims.R, y % dims.C
    return superblock * per_superblock + (i // grid.rows) * per_row + (j // grid.cols)


def distribute_initial(desc: BlockDesc, p: GridShape, fill: BlockFill = default_fill) -> list[LocalStore]:
    n_blocks = desc.N
    if n_blocks % p.rows:
        raise DivisibilityError("rows", p.rows, n_blocks, f"grid {p}")
    if n_blocks % p.cols:
        raise DivisibilityError("cols", p.cols, n_blocks, f"grid {p}")

    stores = [LocalStore(pid=pid, grid=p, n_blocks=n_blocks) for pid in range(p.size())]
    for x in range(n_blocks):
        for y in range(n_blocks):
            payload = np.asarray(fill(x, y, desc.nb), dtype=np.float64)
            payload.setflags(write=False)
            owner = p.cols * (x % p.rows) + (y % p.cols)
            stores[owner].put(Block((x, y), payload))
    logger.debug(f"Distributed {n_blocks}x{n_blocks} blocks onto {p}")
    return stores


def pack(plan: RedistributionPlan, pid: int, step: int, store: LocalStore) -> Message:
    """Collect the block at this entry's relative position from every superblock."""
    blocks = []
    for coord in plan.message_coords(step, pid):
        block = store.get(coord)
        if block is None:
            raise MissingBlock(store.pid, coord)
        blocks.append(block)
    return Message(step=step, src=pid, dst=int(plan.transfer.dest[step, pid]), blocks=tuple(blocks))


def unpack(msg: Message, store: LocalStore, q: GridShape) -> LocalStore:
    """Place each block by its carried global coordinate."""
    for block in msg.blocks:
        x, y = block.coord
        owner = dest_owner(x, y, q)
        if owner != store.pid:
            raise WrongDestination(store.pid, block.coord, owner)
        store.put(block)
    return store


class InMemoryTransport:
    """Per-destination mailboxes for one communication step."""

    def __init__(self, destinations: int):
        self._mailboxes = [asyncio.Queue() for _ in range(destinations)]
        self.sent = 0

    async def send(self, msg: Message) -> None:
        await self._mailboxes[msg.dst].put(msg)
        self.sent += 1

    def drain(self, dst: int) -> list[Message]:
        mailbox = self._mailboxes[dst]
        received = []
        while not mailbox.empty():
            received.append(mailbox.get_nowait())
        return sorted(received, key=lambda msg: msg.src)


def _check_sources(plan: RedistributionPlan, sources: Sequence[LocalStore]) -> None:
    p = plan.problem.src
    if len(sources) != p.size():
        raise ExecutionError(f"plan needs {p.size()} source stores, got {len(sources)}")
    for pid, store in enumerate(sources):
        if store.pid != pid or store.grid != p or store.n_blocks != plan.problem.n_blocks:
            raise ExecutionError(
                f"source store {pid} is pid {store.pid} on {store.grid} with N={store.n_blocks}, "
                f"plan expects pid {pid} on {p} with N={plan.problem.n_blocks}"
            )


async def execute_async(plan: RedistributionPlan, sources: Sequence[LocalStore]) -> ExecutionResult:
    """Run every schedule step, fanning out over source pids with a barrier per step."""
    _check_sources(plan, sources)
    q = plan.problem.dst
    dests = [LocalStore(pid=pid, grid=q, n_blocks=plan.problem.n_blocks) for pid in range(q.size())]
    traces = []

    for step in range(plan.steps):
        transport = InMemoryTransport(q.size())
        deliveries = [0] * q.size()

        async def send_one(pid: int) -> Message:
            msg = pack(plan, pid, step, sources[pid])
            deliveries[msg.dst] += 1
            if msg.is_copy:
                unpack(msg, dests[pid], q)
            else:
                await transport.send(msg)
            return msg

        async def receive_all(dst: int) -> None:
            for msg in transport.drain(dst):
                unpack(msg, dests[dst], q)

        try:
            messages = await asyncio.gather(*(send_one(pid) for pid in range(len(sources))))
            await asyncio.gather(*(receive_all(dst) for dst in range(q.size())))
        except DuplicateSlot as exc:
            raise DuplicateDelivery(step, exc) from exc

        copies = sum(1 for msg in messages if msg.is_copy)
        trace = StepTrace(
            step=step,
            copies=copies,
            sends=transport.sent,
            blocks_moved=sum(len(msg.blocks) for msg in messages),
            deliveries=tuple(deliveries),
        )
        if trace.max_fan_in > 1:
            logger.debug(f"Step {step}: busiest destination received {trace.max_fan_in} messages")
        traces.append(trace)

    return ExecutionResult(stores=dests, steps=traces)


def execute(plan: RedistributionPlan, sources: Sequence[LocalStore]) -> ExecutionResult:
    return asyncio.run(execute_async(plan, sources))


def verify(dests: Sequence[LocalStore], problem: RedistProblem, fill: BlockFill = default_fill) -> VerificationReport:
    """Brute-force check of every block's owner, slot and payload."""
    q = problem.dst
    n_blocks = problem.n_blocks
    nb = problem.blocks.nb

    found: dict[Coord, list[tuple[int, Coord, Block]]] = {}
    for store in dests:
        for slot, block in store.blocks.items():
            found.setdefault(block.coord, []).append((store.pid, slot, block))

    mismatches = []
    mismatch_count = 0

    def record(coord: Coord, reason: str, expected: int, found_pid: Optional[int] = None) -> None:
        nonlocal mismatch_count
        mismatch_count += 1
        if len(mismatches) < MAX_REPORTED_MISMATCHES:
            mismatches.append(Mismatch(coord, reason, expected, found_pid))

    for x in range(n_blocks):
        for y in range(n_blocks):
            expected = q.cols * (x % q.rows) + (y % q.cols)
            copies = found.get((x, y), [])
            if not copies:
                record((x, y), "missing", expected)
                continue
            if len(copies) > 1:
                record((x, y), "duplicate", expected, copies[1][0])
                continue
            pid, slot, block = copies[0]
            if pid != expected:
                record((x, y), "wrong-store", expected, pid)
            elif slot != (x // q.rows, y // q.cols):
                record((x, y), "wrong-slot", expected, pid)
            elif not np.array_equal(block.payload, fill(x, y, nb)):
                record((x, y), "payload", expected, pid)

    expected_count = n_blocks * n_blocks // q.size()
    count_errors = {store.pid: len(store) for store in dests if len(store) != expected_count}
    if len(dests) != q.size():
        count_errors[-1] = len(dests)
    for coord in found.keys() - {(x, y) for x in range(n_blocks) for y in range(n_blocks)}:
        record(coord, "foreign", -1, found[coord][0][0])

    passed = mismatch_count == 0 and not count_errors
    if passed:
        logger.info(f"Verified {n_blocks * n_blocks} blocks on {q}")
    else:
        logger.error(f"Verification failed on {q}: {mismatch_count} mismatches, {len(count_errors)} store count errors")
    return VerificationReport(
        passed=passed,
        blocks_checked=n_blocks * n_blocks,
        mismatch_count=mismatch_count,
        mismatches=mismatches,
        count_errors=count_errors,
    )


def resize_session(
    grids: Sequence[GridShape],
    desc: BlockDesc,
    fill: BlockFill = default_fill,
    shifts: bool = True,
) -> SessionReport:
    """
    Chain plan, execute and verify over consecutive grids.

    Every hop is validated before any data moves; a failing hop raises
    ``HopError`` naming its index (1-based).
    """
    grids = list(grids)
    problems = []
    for hop, (src, dst) in enumerate(pairwise(grids), start=1):
        try:
            problems.append(validate(RedistProblem(src, dst, desc)))
        except ProblemError as exc:
            raise HopError(hop, str(src), str(dst), exc) from exc

    if not problems:
        return SessionReport(hops=[], stores=[])

    stores = distribute_initial(desc, grids[0], fill)
    hops = []
    for hop, problem in enumerate(problems, start=1):
        hop_plan = build_plan(problem, shifts=shifts)
        result = execute(hop_plan, stores)
        report = verify(result.stores, problem, fill)
        hops.append(
            HopReport(
                hop=hop,
                src=problem.src,
                dst=problem.dst,
                stats=analytics.stats(hop_plan),
                shift_case=hop_plan.shift_case.value,
                contentions_before=hop_plan.contentions_before,
                contentions_after=hop_plan.contentions_after,
                max_step_fan_in=max((trace.max_fan_in for trace in result.steps), default=0),
                verification=report,
            )
        )
        logger.info(f"Hop {hop} {problem.describe()}: {'VERIFIED' if report.passed else 'FAILED'}")
        stores = result.stores
    return SessionReport(hops=hops, stores=stores)


def iter_blocks(stores: Iterable[LocalStore]) -> Iterable[tuple[int, Coord, Block]]:
    """(owner pid, slot, block) for every block, stores and slots in sorted order."""
    for store in sorted(stores, key=lambda s: s.pid):
        for slot in sorted(store.blocks):
            yield store.pid, slot, store.blocks[slot]
