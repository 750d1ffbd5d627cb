"""Cycle-accurate weight-stationary sparse tensor array.

Timing model
------------
All registers update synchronously once per ``step``; combinational logic
reads the values latched at the previous edge. The chosen latency constants
(any consistent set preserves functional results, this one is the contract
for reproducible fault placement):

* input bundles hop one column east per cycle, partial sums hop one row
  south per cycle;
* a wave presented at the west edge on cycle ``p`` reaches PE row ``r`` on
  cycle ``p + r`` (skewed arrival, realized by the feeder);
* PE (r, c) computes with that wave on cycle ``p + r + c + 1`` and its
  bottom-of-column result for column ``c`` is live on cycle ``p + R + c + 1``,
  which is when it is captured as an output (data waves) and fed to the OC
  chain;
* the OC chain output for the wave reaches the corner accumulators on cycle
  ``p + R + C + 1``.

A "wave" is either one data row of the input matrix or one checksum digit
row. Waves are presented back to back: after every ``rows_per_round`` data
rows (and at end of tile) the feeder switches to the ``digits_per_round``
digit waves of the finished round, then streaming resumes immediately. Only
the end of a tile appends ``R + C + 1`` bubble cycles to flush the pipeline.

Wave identities (which cycle carries which row) are scheduler bookkeeping,
not architectural state, so they are not fault-injectable; every register
that holds data is, via its RegisterId.

Faults scheduled at cycle ``T`` are applied right after cycle ``T``'s edge:
the corrupted value is what cycle ``T + 1`` reads. Weight loading is modeled
as instantaneous and happens outside the cycle count, matching a fault model
that only targets the compute/checksum phases.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .checker import CheckerState, ChecksumRoundResult
from .config import ArrayConfig
from .intwrap import check_ndarray_width, flip_bit, wrap
from .registers import RegisterId, RegKind
from .sparsity import DenseMatrix, ShapeError, StructuredSparseMatrix


class StateError(RuntimeError):
    """Operation incompatible with the simulator's current phase."""


class Phase(enum.Enum):
    WEIGHT_LOAD = "WeightLoad"
    IDLE = "Idle"
    STREAM = "Stream"
    CHECKSUM_DIGIT = "ChecksumDigit"
    DRAIN = "Drain"


# Ledger wave tags: (_DATA, row_index) or (_DIGIT, round_index, digit_k).
_DATA = 0
_DIGIT = 1


@dataclass(frozen=True)
class TpeState:
    """Snapshot of one tensor PE's registers."""

    weights: tuple
    indexes: tuple
    input_pipe: tuple
    psum: int


@dataclass
class TileResult:
    outputs: DenseMatrix
    rounds: list


def tile_active_cycles(cfg: ArrayConfig, a_rows: int) -> int:
    """Cycles one tile occupies: all waves plus the pipeline flush."""
    rounds = (a_rows + cfg.rows_per_round - 1) // cfg.rows_per_round
    waves = a_rows + rounds * cfg.digits_per_round
    return waves + cfg.rows + cfg.cols + 1


class SimState:
    """Every register of the array and checker, plus scheduler bookkeeping."""

    def __init__(self, cfg: ArrayConfig):
        self.cfg = cfg
        self.cycle = 0
        self.phase = Phase.WEIGHT_LOAD
        self.digit_index = None

        m, slots = cfg.pattern.m, cfg.slots
        self.weights = np.zeros((cfg.rows, cfg.cols, slots), dtype=np.int64)
        self.indexes = np.zeros((cfg.rows, cfg.cols, slots), dtype=np.int64)
        self.pipe = np.zeros((cfg.rows, cfg.cols, m), dtype=np.int64)
        self.psum = np.zeros((cfg.rows, cfg.cols), dtype=np.int64)
        self.checker = CheckerState(cfg)
        # an index register can encode lanes past m-1 when m is not a power
        # of two; those selections wrap around like a mux with tied inputs
        self._lane_wraps = (1 << cfg.index_width) > m
        self._row_grid = np.arange(cfg.rows)[:, None, None]
        self._col_grid = np.arange(cfg.cols)[None, :, None]

        self.loaded = False
        self._loaded_tile = None
        self.ledger: list = []           # one wave tag (or None) per elapsed cycle
        self._feed: list = []            # 1-D input rows addressed by data tags
        self._outputs = None             # capture buffer of the active tile
        self._rows_in_round = 0
        self._round_seq = 0
        self.round_results: list[ChecksumRoundResult] = []
        self.pending_faults: dict = {}   # cycle -> [FaultSpec]

        self.watch: list[RegisterId] = []
        self.trace_sink = None

    # ------------------------------------------------------------------
    # register access

    def _locate(self, reg: RegisterId):
        """(backing array, element key, width, signed) of one register.

        Index registers are unsigned row offsets; everything else is signed
        two's-complement.
        """
        cfg = self.cfg
        k = reg.kind
        if k is RegKind.WEIGHT:
            return self.weights, (reg.row, reg.col, reg.lane), cfg.input_width, True
        if k is RegKind.INDEX:
            return self.indexes, (reg.row, reg.col, reg.lane), cfg.index_width, False
        if k is RegKind.INPUT_PIPE:
            return self.pipe, (reg.row, reg.col, reg.lane), cfg.input_width, True
        if k is RegKind.PSUM:
            return self.psum, (reg.row, reg.col), cfg.col_out_width, True
        if k is RegKind.IC_ACC:
            return self.checker.ic, (reg.row, reg.lane), cfg.ic_width, True
        if k is RegKind.OC_PIPE:
            return self.checker.oc, (reg.col,), cfg.oc_width, True
        if k is RegKind.CKSUM_ACTUAL:
            return None, "actual", cfg.cksum_width, True
        if k is RegKind.CKSUM_PREDICTED:
            return None, "predicted", cfg.cksum_width, True
        raise ValueError(f"unknown register {reg.name}")

    def _check_coords(self, reg: RegisterId):
        cfg = self.cfg
        k = reg.kind
        ok = True
        if k in (RegKind.WEIGHT, RegKind.INDEX):
            ok = 0 <= reg.row < cfg.rows and 0 <= reg.col < cfg.cols and 0 <= reg.lane < cfg.slots
            if k is RegKind.INDEX and cfg.index_width == 0:
                ok = False
        elif k is RegKind.INPUT_PIPE:
            ok = 0 <= reg.row < cfg.rows and 0 <= reg.col < cfg.cols and 0 <= reg.lane < cfg.pattern.m
        elif k is RegKind.PSUM:
            ok = 0 <= reg.row < cfg.rows and 0 <= reg.col < cfg.cols
        elif k is RegKind.IC_ACC:
            ok = 0 <= reg.row < cfg.rows and 0 <= reg.lane < cfg.pattern.m
        elif k is RegKind.OC_PIPE:
            ok = 0 <= reg.col < cfg.cols
        if not ok:
            raise ValueError(f"unknown register {reg.name} for this array configuration")

    def read_register(self, reg: RegisterId) -> int:
        self._check_coords(reg)
        arr, where, _, _ = self._locate(reg)
        if arr is None:
            return getattr(self.checker, where)
        return int(arr[where])

    def write_register(self, reg: RegisterId, value: int) -> None:
        self._check_coords(reg)
        arr, where, width, signed = self._locate(reg)
        value = int(wrap(value, width)) if signed else int(value) & ((1 << width) - 1)
        if arr is None:
            setattr(self.checker, where, value)
        else:
            arr[where] = value

    def flip_register_bit(self, reg: RegisterId, bit: int) -> None:
        self._check_coords(reg)
        arr, where, width, signed = self._locate(reg)
        current = getattr(self.checker, where) if arr is None else int(arr[where])
        if signed:
            flipped = flip_bit(current, bit, width)
        else:
            if not 0 <= bit < width:
                raise ValueError(f"bit {bit} out of range for width {width}")
            flipped = current ^ (1 << bit)
        if arr is None:
            setattr(self.checker, where, flipped)
        else:
            arr[where] = flipped

    def tpe_state(self, row: int, col: int) -> TpeState:
        return TpeState(
            weights=tuple(int(v) for v in self.weights[row, col]),
            indexes=tuple(int(v) for v in self.indexes[row, col]),
            input_pipe=tuple(int(v) for v in self.pipe[row, col]),
            psum=int(self.psum[row, col]),
        )

    # ------------------------------------------------------------------
    # fault scheduling

    def schedule_faults(self, faults) -> None:
        for spec in faults:
            if spec.cycle < self.cycle:
                raise ValueError(f"fault cycle {spec.cycle} already passed (now {self.cycle})")
            self._check_coords(spec.register)
            _, _, width, _ = self._locate(spec.register)
            if not 0 <= spec.bit < width:
                raise ValueError(f"bit {spec.bit} out of range for {spec.register.name}")
            self.pending_faults.setdefault(spec.cycle, []).append(spec)

    # ------------------------------------------------------------------
    # clocking

    def load_weights(self, w_tile: StructuredSparseMatrix) -> None:
        """Weight-loading phase: latch one tile's packed weights and indexes.

        Overwrites every weight/index slot, which also clears any fault that
        landed there earlier (faults persist only until overwritten).
        """
        cfg = self.cfg
        if self._rows_in_round:
            raise StateError("cannot load weights mid-round")
        if w_tile.pattern != cfg.pattern:
            raise ShapeError(f"tile pattern {w_tile.pattern} != array pattern {cfg.pattern}")
        if w_tile.rows != cfg.tile_k or w_tile.cols != cfg.cols:
            raise ShapeError(
                f"weight tile is {w_tile.rows}x{w_tile.cols}, "
                f"array expects {cfg.tile_k}x{cfg.cols}"
            )
        self.phase = Phase.WEIGHT_LOAD
        n = cfg.pattern.n
        self.weights[:] = 0
        self.indexes[:] = 0
        self.weights[:, :, :n] = w_tile.values
        self.indexes[:, :, :n] = w_tile.indexes
        self.loaded = True
        self._loaded_tile = w_tile
        self.phase = Phase.IDLE

    def step(self, west_inputs=None) -> None:
        """Raw clock edge with explicit per-row west bundles (or bubbles).

        Bypasses the wave scheduler: inputs are not tagged, so they are not
        IC-accumulated, captured, or corner-accumulated. Intended for
        PE-level unit tests and single-cycle experiments; orchestrated runs
        go through run_tile / checksum_round.
        """
        cfg = self.cfg
        if west_inputs is None:
            west = np.zeros((cfg.rows, cfg.pattern.m), dtype=np.int64)
            if self.phase is not Phase.WEIGHT_LOAD:
                self.phase = Phase.DRAIN
        else:
            if self.phase is Phase.WEIGHT_LOAD:
                raise StateError("cannot stream inputs during the weight-load phase")
            west = np.asarray(west_inputs, dtype=np.int64)
            if west.shape != (cfg.rows, cfg.pattern.m):
                raise ShapeError(
                    f"west inputs shape {west.shape} != ({cfg.rows}, {cfg.pattern.m})"
                )
            check_ndarray_width(west, cfg.input_width, "west input")
            self.phase = Phase.STREAM
        self.ledger.append(None)
        none_rows = np.zeros(cfg.rows, dtype=bool)
        self._clock(west, none_rows, none_rows)

    def _present(self, tag) -> None:
        """Advance one cycle, presenting ``tag`` as the wave entering row 0."""
        cfg = self.cfg
        m = cfg.pattern.m
        last_digit = cfg.digits_per_round - 1
        self.ledger.append(tag)
        T = self.cycle
        west = np.zeros((cfg.rows, m), dtype=np.int64)
        is_data = np.zeros(cfg.rows, dtype=bool)
        is_last = np.zeros(cfg.rows, dtype=bool)
        for r in range(min(cfg.rows, T + 1)):
            wt = self.ledger[T - r]
            if wt is None:
                continue
            if wt[0] == _DATA:
                west[r] = self._feed[wt[1]][r * m:(r + 1) * m]
                is_data[r] = True
            else:
                west[r] = self.checker.digit_wave(r, wt[2])
                if wt[2] == last_digit:
                    is_last[r] = True
        self._clock(west, is_data, is_last)

    def _clock(self, west, is_data, is_last_digit) -> None:
        cfg = self.cfg
        ck = self.checker
        T = self.cycle
        n_act = cfg.pattern.n

        bottom = self.psum[cfg.rows - 1]
        chain_out = int(ck.oc[cfg.cols - 1])

        # output capture: column c carries the wave presented at T - (R+c+1)
        if self._outputs is not None:
            base = T - cfg.rows - 1
            for c in range(min(cfg.cols, base + 1)):
                wt = self.ledger[base - c]
                if wt is not None and wt[0] == _DATA:
                    self._outputs[wt[1], c] = bottom[c]

        # tensor PE grid
        idx = self.indexes[:, :, :n_act]
        if self._lane_wraps:
            idx = idx % cfg.pattern.m
        sel = self.pipe[self._row_grid, self._col_grid, idx]
        prod = (sel * self.weights[:, :, :n_act]).sum(axis=2)
        psum_next = np.empty_like(self.psum)
        psum_next[0] = prod[0]
        psum_next[1:] = self.psum[:-1] + prod[1:]
        psum_next = wrap(psum_next, cfg.col_out_width)
        pipe_next = np.empty_like(self.pipe)
        pipe_next[:, 0, :] = west
        pipe_next[:, 1:, :] = self.pipe[:, :-1, :]

        # IC accumulators: add data bundles, clear after the last digit wave
        ic_next = ck.ic.copy()
        if is_data.any():
            ic_next[is_data] = wrap(ck.ic[is_data] + west[is_data], cfg.ic_width)
        if is_last_digit.any():
            ic_next[is_last_digit] = 0

        # OC chain: running west-to-east sum of bottom-of-column results
        oc_next = np.empty_like(ck.oc)
        oc_next[0] = bottom[0]
        oc_next[1:] = ck.oc[:-1] + bottom[1:]
        oc_next = wrap(oc_next, cfg.oc_width)

        # corner accumulators consume the wave presented at T - (R+C+1)
        p = T - (cfg.rows + cfg.cols + 1)
        ctag = self.ledger[p] if p >= 0 else None

        # commit
        self.psum = psum_next
        self.pipe = pipe_next
        ck.ic = ic_next
        ck.oc = oc_next
        round_done = None
        if ctag is not None:
            if ctag[0] == _DATA:
                ck.actual_accumulate(chain_out)
            else:
                _, q, k = ctag
                ck.predicted_accumulate(chain_out, k)
                if k == cfg.digits_per_round - 1:
                    round_done = q
        if round_done is not None:
            self.round_results.append(ck.compare_and_reset(round_done))

        if self.trace_sink is not None and self.watch:
            label = self.phase.value
            if self.phase is Phase.CHECKSUM_DIGIT and self.digit_index is not None:
                label = f"ChecksumDigit({self.digit_index})"
            for reg in self.watch:
                self.trace_sink.write(f"{T},{label},{reg.name},{self.read_register(reg)}\n")

        self.cycle = T + 1
        for spec in self.pending_faults.pop(T, ()):
            self.flip_register_bit(spec.register, spec.bit)

    # ------------------------------------------------------------------
    # orchestrated flows

    def stream_rows(self, rows: np.ndarray) -> None:
        """Present data rows (full ``tile_k``-wide) through the scheduler."""
        cfg = self.cfg
        if not self.loaded:
            raise StateError("weights must be loaded before streaming")
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != cfg.tile_k:
            raise ShapeError(f"input rows must have {cfg.tile_k} columns, got {rows.shape[1]}")
        check_ndarray_width(rows, cfg.input_width, "input element")
        for row in rows:
            if self._rows_in_round >= cfg.rows_per_round:
                raise StateError(
                    f"checksum round required after {cfg.rows_per_round} rows"
                )
            self.phase = Phase.STREAM
            self.digit_index = None
            self._feed.append(row)
            self._present((_DATA, len(self._feed) - 1))
            self._rows_in_round += 1

    def _emit_digit_waves(self) -> int:
        q = self._round_seq
        for k in range(self.cfg.digits_per_round):
            self.phase = Phase.CHECKSUM_DIGIT
            self.digit_index = k
            self._present((_DIGIT, q, k))
        self._round_seq += 1
        self._rows_in_round = 0
        self.digit_index = None
        return q

    def _drain(self) -> None:
        self.phase = Phase.DRAIN
        for _ in range(self.cfg.rows + self.cfg.cols + 1):
            self._present(None)
        self.phase = Phase.IDLE

    def checksum_round(self) -> ChecksumRoundResult:
        """Finish the current round: digit waves, flush, compare.

        Requires at least one streamed data row since the previous round
        (the pipeline must sit at a round boundary).
        """
        if not self.loaded:
            raise StateError("weights must be loaded before a checksum round")
        if self._rows_in_round == 0:
            raise StateError("pipeline is not at a round boundary (no rows streamed)")
        q = self._emit_digit_waves()
        self._drain()
        result = self.round_results[-1]
        assert result.round_index == q
        return result

    def run_tile(self, a_tile: DenseMatrix, w_tile: StructuredSparseMatrix, faults=()) -> TileResult:
        """Stream one tile: weight load, skewed rows, checksum rounds, drain.

        Reloads ``w_tile`` unless the very same tile is already resident, so
        back-to-back calls with shared weights keep the loaded registers
        (including any injected corruption, as real hardware would).
        """
        cfg = self.cfg
        if self._rows_in_round:
            raise StateError("cannot start a tile mid-round")
        if a_tile.cols != cfg.tile_k:
            raise ShapeError(f"input tile is {a_tile.rows}x{a_tile.cols}, "
                             f"array expects width {cfg.tile_k}")
        if a_tile.rows < 1:
            raise ShapeError("input tile must have at least one row")
        a_tile.check_width(cfg.input_width)
        if not (self.loaded and self._loaded_tile == w_tile):
            self.load_weights(w_tile)
        self.schedule_faults(faults)

        self._feed = []
        self._outputs = np.zeros((a_tile.rows, cfg.cols), dtype=np.int64)
        first_round = len(self.round_results)

        t = cfg.rows_per_round
        for start in range(0, a_tile.rows, t):
            self.stream_rows(a_tile.data[start:start + t])
            self._emit_digit_waves()
        self._drain()

        outputs = DenseMatrix(a_tile.rows, cfg.cols, self._outputs)
        self._outputs = None
        return TileResult(outputs=outputs, rounds=self.round_results[first_round:])
