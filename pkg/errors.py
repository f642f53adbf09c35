"""Exception hierarchy shared by planning, simulation and the front ends."""
from typing import Optional


class RedistError(Exception):
    """Base class for every failure raised by this project."""


# Problem definition

class ProblemError(RedistError):
    """The redistribution problem itself is not acceptable."""


class ZeroGridError(ProblemError, ValueError):
    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        super().__init__(f"processor grid {rows}x{cols} must have at least one row and one column")


class GridFormatError(ProblemError, ValueError):
    def __init__(self, text: str):
        self.text = text
        super().__init__(f"cannot parse processor grid {text!r}, expected RxC such as 2x4")


class DivisibilityError(ProblemError):
    """The block-grid side is not a multiple of a required divisor."""

    def __init__(self, dimension: str, divisor: int, n_blocks: int, detail: str = ""):
        self.dimension = dimension
        self.divisor = divisor
        self.n_blocks = n_blocks
        message = f"{dimension}: {n_blocks} is not divisible by {divisor}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class BlockIndexError(ProblemError, IndexError):
    def __init__(self, x: int, y: int, n_blocks: Optional[int]):
        self.x = x
        self.y = y
        self.n_blocks = n_blocks
        bound = f"[0, {n_blocks})" if n_blocks is not None else "non-negative values"
        super().__init__(f"block ({x}, {y}) is outside the block grid, indices must be {bound}")


class HopError(ProblemError):
    """A resize-session hop failed validation."""

    def __init__(self, hop: int, src: str, dst: str, cause: ProblemError):
        self.hop = hop
        self.src = src
        self.dst = dst
        self.cause = cause
        super().__init__(f"hop {hop} ({src} -> {dst}): {cause}")


# Schedule construction

class ScheduleError(RedistError):
    """The schedule tables are inconsistent."""


class ColumnOverflow(ScheduleError):
    def __init__(self, pid: int, steps: int, filled: int):
        self.pid = pid
        self.steps = steps
        self.filled = filled
        super().__init__(f"source {pid} holds {filled} schedule entries, expected exactly {steps}")


class ContentionPresent(ScheduleError):
    def __init__(self, step: int, dest: int):
        self.step = step
        self.dest = dest
        super().__init__(f"step {step} sends to destination {dest} more than once, receive table is undefined")


class PlanDocumentError(ScheduleError):
    """A serialized plan does not agree with the plan its problem produces."""


# Simulated execution

class ExecutionError(RedistError):
    """The simulated engine met a store or message it cannot handle."""


class MissingBlock(ExecutionError):
    def __init__(self, pid: int, coord: tuple):
        self.pid = pid
        self.coord = coord
        super().__init__(f"store {pid} does not hold block {coord}")


class WrongDestination(ExecutionError):
    def __init__(self, pid: int, coord: tuple, owner: int):
        self.pid = pid
        self.coord = coord
        self.owner = owner
        super().__init__(f"block {coord} belongs to destination {owner}, not {pid}")


class DuplicateSlot(ExecutionError):
    def __init__(self, pid: int, slot: tuple, coord: tuple):
        self.pid = pid
        self.slot = slot
        self.coord = coord
        super().__init__(f"store {pid} slot {slot} already written before block {coord} arrived")


class DuplicateDelivery(DuplicateSlot):
    def __init__(self, step: int, cause: DuplicateSlot):
        super().__init__(cause.pid, cause.slot, cause.coord)
        self.step = step
        self.args = (f"step {step}: {cause}",)


# Cost model

class CostParamError(RedistError, ValueError):
    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"{name} must be non-negative, got {value}")
