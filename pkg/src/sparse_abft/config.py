"""Array geometry and datapath width configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .sparsity import SparsityPattern, PATTERN_2_4


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry and bit widths of the sparse tensor array plus its checker.

    The array has ``rows`` x ``cols`` tensor PEs. Each PE row ingests
    ``pattern.m`` input lanes per cycle, so a weight tile spans
    ``pattern.m * rows`` logical weight rows. Every adder in the datapath
    wraps at its register's declared width.
    """

    rows: int = 8
    cols: int = 32
    pattern: SparsityPattern = field(default_factory=lambda: PATTERN_2_4)
    input_width: int = 8        # activation / weight / digit operands
    col_out_width: int = 24     # per-column partial-sum registers
    ic_width: int = 16          # input-checksum accumulators (west edge)
    oc_width: int = 24          # output-checksum adder chain (south edge)
    cksum_width: int = 48       # actual / predicted checksum accumulators

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have at least 1x1 tensor PEs")
        for name in ("input_width", "col_out_width", "ic_width", "oc_width", "cksum_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.ic_width < self.input_width:
            raise ValueError("ic_width must be at least input_width")
        if self.ic_width % self.input_width != 0:
            raise ValueError("ic_width must be divisible by input_width")

    @property
    def slots(self) -> int:
        """Physical weight slots per tensor PE.

        The PE is built with two slots so one design covers both 2:4 and 1:4
        operation; in 1:4 mode slot 1 sits idle. Patterns with n > 2 grow
        the PE accordingly.
        """
        return max(2, self.pattern.n)

    @property
    def index_width(self) -> int:
        """Bits per stored weight index (row offset within an m-block)."""
        return (self.pattern.m - 1).bit_length()

    @property
    def tile_k(self) -> int:
        """Weight rows consumed by one loaded tile (= input lanes per cycle)."""
        return self.pattern.m * self.rows

    @property
    def rows_per_round(self) -> int:
        """Input rows that can accumulate before a checksum round is forced.

        The IC accumulators hold sums of input_width-wide values; after
        2^(ic_width - input_width) rows the sum can no longer be guaranteed
        to fit, so streaming is interrupted for a checksum round.
        """
        return 1 << (self.ic_width - self.input_width)

    @property
    def digits_per_round(self) -> int:
        """Digit waves needed to push one ic_width checksum through the array."""
        return self.ic_width // self.input_width

    def with_pattern(self, pattern: SparsityPattern) -> "ArrayConfig":
        return replace(self, pattern=pattern)

    def to_json_dict(self) -> dict:
        return {
            "R": self.rows,
            "C": self.cols,
            "pattern": str(self.pattern),
            "input_width": self.input_width,
            "ic_width": self.ic_width,
            "oc_width": self.oc_width,
            "col_out_width": self.col_out_width,
            "cksum_width": self.cksum_width,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ArrayConfig":
        if not isinstance(obj, dict):
            raise ValueError("config must be a JSON object")
        known = {"R", "C", "pattern", "input_width", "ic_width", "oc_width",
                 "col_out_width", "cksum_width", "workload"}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        if "R" in obj:
            kwargs["rows"] = int(obj["R"])
        if "C" in obj:
            kwargs["cols"] = int(obj["C"])
        if "pattern" in obj:
            kwargs["pattern"] = SparsityPattern.parse(obj["pattern"])
        for name in ("input_width", "ic_width", "oc_width", "col_out_width", "cksum_width"):
            if name in obj:
                kwargs[name] = int(obj[name])
        return cls(**kwargs)


def load_config(path) -> ArrayConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {path}: {exc}") from exc
    return ArrayConfig.from_json_dict(obj)
