import csv
import hashlib
import io
from typing import Iterable, Sequence

import numpy as np

from analytics import SweepRow, Table2Comparison
from redistribute import LocalStore, iter_blocks
from schedule import TransferTable

TRANSFER_HEADER = ["step", "src", "dst", "i", "j"]
SWEEP_HEADER = ["src", "dst", "topology", "steps", "copies", "sendrecvs", "contentions", "message_blocks", "modeled_cost_s"]
STATS_HEADER = ["steps", "copies", "sendrecvs", "contentions", "max_fan_in", "message_blocks"]
TABLE2_HEADER = [
    "p", "q", "topology", "src", "dst", "steps", "copies", "sendrecvs",
    "published_steps", "published_copies", "published_sendrecvs", "verdict",
]
BLOCKS_HEADER = ["x", "y", "owner", "slot_x", "slot_y", "checksum"]


def _render(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def transfer_csv(transfer: TransferTable) -> str:
    """One line per schedule entry, step-major then source pid."""
    rows = []
    for step in range(transfer.steps):
        for pid in range(transfer.sources):
            dst, (i, j) = transfer.entry(step, pid)
            rows.append((step, pid, dst, i, j))
    return _render(TRANSFER_HEADER, rows)


def parse_transfer_csv(text: str) -> TransferTable:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != TRANSFER_HEADER:
        raise ValueError(f"transfer CSV header must be {','.join(TRANSFER_HEADER)}, got {reader.fieldnames}")
    entries = [{key: int(value) for key, value in row.items()} for row in reader]
    if not entries:
        raise ValueError("transfer CSV has no entries")
    steps = max(entry["step"] for entry in entries) + 1
    sources = max(entry["src"] for entry in entries) + 1
    dest = np.full((steps, sources), -1, dtype=np.int64)
    coords = np.full((steps, sources, 2), -1, dtype=np.int64)
    for entry in entries:
        dest[entry["step"], entry["src"]] = entry["dst"]
        coords[entry["step"], entry["src"]] = (entry["i"], entry["j"])
    if (dest < 0).any():
        raise ValueError("transfer CSV leaves schedule entries undefined")
    dest.setflags(write=False)
    coords.setflags(write=False)
    return TransferTable(dest, coords)


def stats_csv(stats) -> str:
    return _render(STATS_HEADER, [[getattr(stats, name) for name in STATS_HEADER]])


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    lines = []
    for row in rows:
        if row.stats is None:
            lines.append((row.src, row.dst, "error", "", "", "", "", "", ""))
            continue
        s = row.stats
        lines.append((row.src, row.dst, row.topology, s.steps, s.copies, s.sendrecvs, s.contentions, s.message_blocks, repr(row.modeled_cost_s)))
    return _render(SWEEP_HEADER, lines)


def table2_csv(rows: Iterable[Table2Comparison]) -> str:
    lines = []
    for row in rows:
        computed = row.computed
        ours = (computed.steps, computed.copies, computed.sendrecvs) if computed else ("", "", "")
        lines.append((
            row.p, row.q, row.topology, row.src, row.dst, *ours,
            row.published_steps, row.published_copies, row.published_sendrecvs, row.verdict,
        ))
    return _render(TABLE2_HEADER, lines)


def payload_checksum(payload: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(payload, dtype=np.float64).tobytes()).hexdigest()[:12]


def blocks_csv(stores: Iterable[LocalStore]) -> str:
    """Debug dump of every block held by ``stores``."""
    rows = [
        (block.coord[0], block.coord[1], pid, slot[0], slot[1], payload_checksum(block.payload))
        for pid, slot, block in iter_blocks(stores)
    ]
    return _render(BLOCKS_HEADER, rows)
