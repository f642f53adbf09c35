"""
Processor grids, block-matrix descriptors and ownership formulas.

A block Mat(x, y) of an N x N block grid lives on processor
``cols * (x % rows) + (y % cols)`` of a rows x cols grid. Source pid k and
destination pid k name the same physical node.
"""
from dataclasses import dataclass
import logging
import math
import re
from typing import Optional

from errors import BlockIndexError, DivisibilityError, GridFormatError, ZeroGridError

logger = logging.getLogger(__name__)

_GRID_PATTERN = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


@dataclass(frozen=True)
class GridShape:
    """A rows x cols processor grid with row-major pid numbering."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ZeroGridError(self.rows, self.cols)

    @classmethod
    def parse(cls, text: str) -> "GridShape":
        match = _GRID_PATTERN.match(text)
        if not match:
            raise GridFormatError(text)
        return cls(int(match.group(1)), int(match.group(2)))

    def size(self) -> int:
        return self.rows * self.cols

    def pid(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"grid cell ({i}, {j}) outside {self}")
        return self.cols * i + j

    def coords(self, pid: int) -> tuple[int, int]:
        if not 0 <= pid < self.size():
            raise IndexError(f"pid {pid} outside {self}")
        return divmod(pid, self.cols)

    def __str__(self) -> str:
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class BlockDesc:
    """An n x n matrix cut into NB x NB blocks, N = n / NB blocks per side."""

    n: int
    nb: int = 1

    def __post_init__(self):
        if self.n < 1 or self.nb < 1:
            raise DivisibilityError("matrix side", self.nb, self.n, "sizes must be positive")
        if self.n % self.nb:
            raise DivisibilityError("matrix side", self.nb, self.n, "n must be a multiple of the block size")

    @classmethod
    def from_blocks(cls, n_blocks: int, nb: int = 1) -> "BlockDesc":
        return cls(n=n_blocks * nb, nb=nb)

    @property
    def N(self) -> int:
        return self.n // self.nb

    @property
    def total_blocks(self) -> int:
        return self.N * self.N

    def block_id(self, x: int, y: int) -> int:
        """Global diagnostic id, ownership logic never uses it."""
        return x * self.N + y


@dataclass(frozen=True)
class RedistProblem:
    src: GridShape
    dst: GridShape
    blocks: BlockDesc

    @property
    def n_blocks(self) -> int:
        return self.blocks.N

    def describe(self) -> str:
        return f"{self.src} -> {self.dst}, N={self.n_blocks}, NB={self.blocks.nb}"


def lcm(a: int, b: int) -> int:
    if a < 1 or b < 1:
        raise ValueError(f"lcm is defined here for positive integers, got ({a}, {b})")
    return math.lcm(a, b)


def _owner(x: int, y: int, grid: GridShape, n_blocks: Optional[int]) -> int:
    if x < 0 or y < 0 or (n_blocks is not None and (x >= n_blocks or y >= n_blocks)):
        raise BlockIndexError(x, y, n_blocks)
    return grid.cols * (x % grid.rows) + (y % grid.cols)


def source_owner(x: int, y: int, p: GridShape, n_blocks: Optional[int] = None) -> int:
    """Pid of the source processor holding Mat(x, y) before redistribution."""
    return _owner(x, y, p, n_blocks)


def dest_owner(x: int, y: int, q: GridShape, n_blocks: Optional[int] = None) -> int:
    """Pid of the destination processor holding Mat(x, y) after redistribution."""
    return _owner(x, y, q, n_blocks)


def validate(problem: RedistProblem) -> RedistProblem:
    """
    Accept a problem whose block grid tiles into whole superblocks.

    N must be a multiple of lcm(P_r, Q_r) and lcm(P_c, Q_c); this implies the
    weaker per-grid divisibility every processor needs to hold whole blocks.
    """
    for grid in (problem.src, problem.dst):
        if grid.rows < 1 or grid.cols < 1:
            raise ZeroGridError(grid.rows, grid.cols)

    n_blocks = problem.n_blocks
    row_divisor = lcm(problem.src.rows, problem.dst.rows)
    if n_blocks % row_divisor:
        raise DivisibilityError(
            "rows", row_divisor, n_blocks,
            f"lcm(P_r={problem.src.rows}, Q_r={problem.dst.rows}) = {row_divisor}",
        )
    col_divisor = lcm(problem.src.cols, problem.dst.cols)
    if n_blocks % col_divisor:
        raise DivisibilityError(
            "cols", col_divisor, n_blocks,
            f"lcm(P_c={problem.src.cols}, Q_c={problem.dst.cols}) = {col_divisor}",
        )
    logger.debug(f"Validated problem {problem.describe()}")
    return problem


def make_problem(src: GridShape, dst: GridShape, n_blocks: int, block_size: int = 1) -> RedistProblem:
    """Build and validate a problem from a block-grid side."""
    if n_blocks < 1:
        raise DivisibilityError("block grid", 1, n_blocks, "N must be positive")
    return validate(RedistProblem(src, dst, BlockDesc.from_blocks(n_blocks, block_size)))
