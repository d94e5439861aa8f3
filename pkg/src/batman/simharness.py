"""Reputation-estimation experiments on a simulated sensor network.

Node reliabilities are drawn from a Gaussian truncated to [0, 1] by
resampling. At every tick each node emits, with probability ``p_arrival``,
one Bernoulli event of its reliability. All four estimators are traced
tick by tick and scored against the true reliability after a burn-in.

Randomness comes from a single PCG64 stream per seed: reliabilities are
drawn first, then a ``(T, n_nodes, 2)`` block of uniforms (arrival,
outcome). The event stream therefore depends only on the seed, ``T`` and
the Gaussian/arrival parameters. It never depends on the window sizes.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import errors
from .reputation import METHODS, EventRecord, ReputationContract

CSV_COLUMNS = ("method", "T", "s", "N_e", "node", "seed", "true_p",
               "final_estimate", "mae", "var")
TRACE_COLUMNS = ("tick", "node", "true_p", *METHODS)

DEFAULT_T_GRID = tuple(range(500, 5001, 500))
DEFAULT_WINDOW_GRID = tuple(range(100, 301, 25))


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 10
    mu: float = 0.5
    sigma: float = 0.2
    T: int = 3000
    s: int = 150
    N_e: int = 150
    p_arrival: float = 1.0
    seed: int = 0
    burn_in: Optional[int] = None
    # Fixed reliabilities instead of Gaussian draws; length must be n_nodes.
    reliabilities: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.s < 1 or self.N_e < 1:
            raise ValueError("window sizes must be >= 1")
        if not 0.0 <= self.p_arrival <= 1.0:
            raise ValueError("p_arrival must lie in [0, 1]")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.reliabilities is not None:
            if len(self.reliabilities) != self.n_nodes:
                raise ValueError("need one reliability per node")
            if any(not 0.0 <= p <= 1.0 for p in self.reliabilities):
                raise ValueError("reliabilities must lie in [0, 1]")

    @property
    def effective_burn_in(self) -> int:
        return max(self.s, self.N_e) if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class SweepRow:
    method: str
    T: int
    s: Optional[int]
    N_e: Optional[int]
    node: int
    seed: int
    true_p: float
    final_estimate: float
    mae: float
    var: float

    @property
    def window(self) -> Optional[int]:
        return self.s if self.method == "mlt" else self.N_e if self.method == "mle" else None


@dataclass
class SimulationResult:
    config: SimConfig
    reliabilities: np.ndarray
    traces: dict[str, np.ndarray]  # method -> (T, n_nodes), NaN where undefined
    rows: list[SweepRow]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def draw_reliabilities(config: SimConfig, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Per-node success probabilities, Normal(mu, sigma) resampled into [0, 1]."""
    if config.reliabilities is not None:
        return np.array(config.reliabilities, dtype=float)
    if config.sigma == 0:
        if not 0.0 <= config.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1] when sigma is 0")
        return np.full(config.n_nodes, float(config.mu))
    rng = rng if rng is not None else make_rng(config.seed)
    values = rng.normal(config.mu, config.sigma, config.n_nodes)
    for _ in range(10_000):
        bad = (values < 0.0) | (values > 1.0)
        if not bad.any():
            return values
        values[bad] = rng.normal(config.mu, config.sigma, int(bad.sum()))
    raise ValueError("reliability distribution puts almost no mass on [0, 1]")


def draw_events(config: SimConfig, reliabilities: np.ndarray,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``(T, n)`` arrival mask and int ``(T, n)`` outcomes (0 where absent)."""
    u = rng.random((config.T, config.n_nodes, 2))
    arrivals = u[:, :, 0] < config.p_arrival
    outcomes = ((u[:, :, 1] < reliabilities) & arrivals).astype(np.int64)
    return arrivals, outcomes


def _generate(config: SimConfig):
    rng = make_rng(config.seed)
    reliabilities = draw_reliabilities(config, rng)
    arrivals, outcomes = draw_events(config, reliabilities, rng)
    return reliabilities, arrivals, outcomes


def node_id(index: int) -> bytes:
    return index.to_bytes(32, "big")


def _score(trace: np.ndarray, true_p: float, burn_in: int) -> tuple[float, float, float]:
    """(final estimate, MAE, variance) of one node's trace after burn-in."""
    tail = trace[burn_in:]
    tail = tail[~np.isnan(tail)]
    if tail.size == 0:
        mae = var = math.nan
    else:
        mae = float(np.mean(np.abs(tail - true_p)))
        var = float(np.var(tail))
    return float(trace[-1]), mae, var


def _rows_for(method: str, config: SimConfig, s: Optional[int], n_e: Optional[int],
              trace: np.ndarray, reliabilities: np.ndarray, burn_in: int) -> list[SweepRow]:
    rows = []
    for node in range(trace.shape[1]):
        final, mae, var = _score(trace[:, node], float(reliabilities[node]), burn_in)
        rows.append(SweepRow(method, config.T, s, n_e, node, config.seed,
                             float(reliabilities[node]), final, mae, var))
    return rows


def _method_rows(config: SimConfig, traces: dict[str, np.ndarray],
                 reliabilities: np.ndarray, burn_in: int) -> list[SweepRow]:
    rows: list[SweepRow] = []
    for method in METHODS:
        s = config.s if method == "mlt" else None
        n_e = config.N_e if method == "mle" else None
        rows += _rows_for(method, config, s, n_e, traces[method], reliabilities, burn_in)
    return rows


def run_simulation(config: SimConfig) -> SimulationResult:
    """Feed every event through a :class:`ReputationContract` per node.

    Tick ``t`` (1-based) is row ``t - 1`` of each trace. The first
    ``effective_burn_in`` ticks are excluded from MAE and variance.
    """
    reliabilities, arrivals, outcomes = _generate(config)
    T, n = config.T, config.n_nodes
    contracts = [ReputationContract(node_id(j), config.s, config.N_e) for j in range(n)]
    columns = {m: [[math.nan] * T for _ in range(n)] for m in METHODS}
    arrivals_l, outcomes_l = arrivals.T.tolist(), outcomes.T.tolist()
    for j, contract in enumerate(contracts):
        ml, mlt, mle, mlm = (columns[m][j] for m in METHODS)
        node_arrivals, node_outcomes = arrivals_l[j], outcomes_l[j]
        for i in range(T):
            tick = i + 1
            if node_arrivals[i]:
                contract.record_event(EventRecord(contract.node, tick, node_outcomes[i]))
            if contract.total == 0:
                continue
            ml[i] = contract.estimate_ml()
            mle[i] = contract.estimate_mle()
            mlm[i] = contract.estimate_mlm()
            try:
                mlt[i] = contract.estimate_mlt(tick)
            except errors.EmptyWindow:
                pass
    traces = {m: np.array(columns[m], dtype=float).T for m in METHODS}
    rows = _method_rows(config, traces, reliabilities, config.effective_burn_in)
    return SimulationResult(config, reliabilities, traces, rows)


# --- vectorized traces ---------------------------------------------------------

def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _shifted(cum: np.ndarray, lag: int) -> np.ndarray:
    """``cum`` delayed by ``lag`` rows, zero-filled."""
    out = np.zeros_like(cum)
    if lag < cum.shape[0]:
        out[lag:] = cum[:-lag]
    return out


class EventStreams:
    """Cumulative views of one run's events, shared by every window size."""

    def __init__(self, arrivals: np.ndarray, outcomes: np.ndarray):
        self.arrivals = arrivals
        self.outcomes = outcomes
        self.count = np.cumsum(arrivals, axis=0, dtype=np.int64)
        self.successes = np.cumsum(outcomes, axis=0, dtype=np.int64)
        # Per node: successes over the first k events, k = 0..total.
        self.event_sums = [
            np.concatenate(([0], np.cumsum(outcomes[arrivals[:, j], j])))
            for j in range(arrivals.shape[1])
        ]

    def ml(self) -> np.ndarray:
        return _ratio(self.successes, self.count)

    def mlm(self) -> np.ndarray:
        T, n = self.count.shape
        out = np.full((T, n), np.nan)
        for j in range(n):
            means = [math.nan]
            mean = 0.0
            for k, x in enumerate(self.outcomes[self.arrivals[:, j], j].tolist(), 1):
                mean += (x - mean) / k
                means.append(mean)
            out[:, j] = np.asarray(means)[self.count[:, j]]
        return out

    def mlt(self, s: int) -> np.ndarray:
        return _ratio(self.successes - _shifted(self.successes, s),
                      self.count - _shifted(self.count, s))

    def mle(self, n_e: int) -> np.ndarray:
        out = np.empty(self.count.shape)
        for j, sums in enumerate(self.event_sums):
            k = self.count[:, j]
            lo = np.maximum(k - n_e, 0)
            out[:, j] = _ratio(sums[k] - sums[lo], k - lo)
        return out


def simulate_fast(config: SimConfig) -> SimulationResult:
    """Same traces and rows as :func:`run_simulation`, computed with cumulative sums."""
    reliabilities, arrivals, outcomes = _generate(config)
    streams = EventStreams(arrivals, outcomes)
    traces = {"ml": streams.ml(), "mlt": streams.mlt(config.s),
              "mle": streams.mle(config.N_e), "mlm": streams.mlm()}
    rows = _method_rows(config, traces, reliabilities, config.effective_burn_in)
    return SimulationResult(config, reliabilities, traces, rows)


# --- sweeps ----------------------------------------------------------------------

def _sweep_task(args) -> list[SweepRow]:
    config, s_values, ne_values, burn_in = args
    reliabilities, arrivals, outcomes = _generate(config)
    streams = EventStreams(arrivals, outcomes)
    rows = _rows_for("ml", config, None, None, streams.ml(), reliabilities, burn_in)
    rows += _rows_for("mlm", config, None, None, streams.mlm(), reliabilities, burn_in)
    for s in s_values:
        rows += _rows_for("mlt", config, s, None, streams.mlt(s), reliabilities, burn_in)
    for n_e in ne_values:
        rows += _rows_for("mle", config, None, n_e, streams.mle(n_e), reliabilities, burn_in)
    return rows


def run_sweep(T_values: Sequence[int] = DEFAULT_T_GRID,
              s_values: Sequence[int] = DEFAULT_WINDOW_GRID,
              ne_values: Sequence[int] = DEFAULT_WINDOW_GRID,
              seeds: int = 1,
              base: Optional[SimConfig] = None,
              jobs: int = 1) -> list[SweepRow]:
    """Score every estimator over the ``T x s x N_e`` grid.

    Window sizes never influence the event stream, so each ``(T, seed)``
    pair is simulated once and every window is evaluated on that stream.
    Rows are emitted per method and per the window the method depends on:
    ``seeds * |T| * n_nodes * (2 + |s| + |N_e|)`` rows in total. Seeds run
    from ``base.seed`` upward. Burn-in defaults to the largest window in
    the grid so every row of a run is scored on the same ticks.
    """
    base = base or SimConfig()
    if not T_values or seeds < 1:
        raise ValueError("sweep grid is empty")
    windows = [*s_values, *ne_values]
    if any(w < 1 for w in windows):
        raise ValueError("window sizes must be >= 1")
    burn_in = base.burn_in if base.burn_in is not None else max(windows, default=0)
    tasks = [
        (dataclasses.replace(base, T=T, seed=base.seed + k), tuple(s_values),
         tuple(ne_values), burn_in)
        for T in T_values for k in range(seeds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_sweep_task, tasks))
    else:
        chunks = [_sweep_task(task) for task in tasks]
    return [row for chunk in chunks for row in chunk]


def sweep_row_count(n_T: int, n_s: int, n_ne: int, seeds: int, n_nodes: int) -> int:
    return seeds * n_T * n_nodes * (2 + n_s + n_ne)


def aggregate_mae(rows: Iterable[SweepRow], by_T: bool = False) -> dict:
    """Mean MAE over nodes and seeds, keyed by ``(method, window)`` or ``(method, window, T)``."""
    groups: dict = {}
    for row in rows:
        if math.isnan(row.mae):
            continue
        key = (row.method, row.window, row.T) if by_T else (row.method, row.window)
        groups.setdefault(key, []).append(row.mae)
    return {key: float(np.mean(values)) for key, values in sorted(groups.items(), key=str)}


# --- CSV -------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_rows(rows: Iterable[SweepRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])


def _parse_opt(text: str, kind):
    return None if text == "" else kind(text)


def read_rows(lines: Iterable[str]) -> list[SweepRow]:
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    rows = []
    for rec in reader:
        rows.append(SweepRow(
            rec["method"], int(rec["T"]), _parse_opt(rec["s"], int),
            _parse_opt(rec["N_e"], int), int(rec["node"]), int(rec["seed"]),
            float(rec["true_p"]),
            *(math.nan if rec[c] == "" else float(rec[c]) for c in ("final_estimate", "mae", "var")),
        ))
    return rows


def write_traces(result: SimulationResult, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    traces = [result.traces[m] for m in METHODS]
    for i in range(result.config.T):
        for j in range(result.config.n_nodes):
            writer.writerow([i + 1, j, _fmt(float(result.reliabilities[j])),
                             *(_fmt(float(tr[i, j])) for tr in traces)])
