# src/probmodel/process.py
"""
The random partition process and its two ground-truth oracles.

Each block b gets an independent uniform bin tau(b) in 1..l. The statistic X
stacks, for bins j = 1..l-1, the sum of phi(b) over blocks in bin j (bin l
contributes nothing). A partition is a large set / uniform split exactly when
X equals its mean.

Seed streams: trials are cut into fixed chunks of CHUNK_TRIALS; chunk i draws
from default_rng(SeedSequence(seed, spawn_key=(i,))). Counts merged over chunks
do not depend on worker count or scheduling.

- sample_assignment, statistic_X, mean_X, sample_statistics
- monte_carlo_hit_probability (optional multiprocessing workers, tqdm progress)
- exact_hit_probability (dynamic programming over blocks, capped)
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt
import multiprocessing as mp
from typing import Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.common import config
from src.setsys.incidence import IncidenceSystem


class CapExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Assignment:
    tau: np.ndarray     # bins 1..l, one per block
    l: int

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.int64)
        if self.l < 1:
            raise ValueError(f"l must be >= 1, got {self.l}")
        if tau.size and (tau.min() < 1 or tau.max() > self.l):
            raise ValueError(f"bins must lie in 1..{self.l}")
        object.__setattr__(self, "tau", tau)


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_assignment(seed: int, num_blocks: int, l: int) -> Assignment:
    rng = np.random.default_rng(seed)
    return Assignment(rng.integers(1, l + 1, size=num_blocks), l)


def statistic_X(assignment: Assignment, sys: IncidenceSystem) -> np.ndarray:
    if assignment.tau.shape[0] != sys.num_blocks:
        raise ValueError(f"assignment covers {assignment.tau.shape[0]} blocks, system has {sys.num_blocks}")
    M = sys.matrix
    parts = [M[assignment.tau == j].sum(axis=0) for j in range(1, assignment.l)]
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts).astype(np.int64)


def mean_X(sys: IncidenceSystem, l: int) -> List[Fraction]:
    one_bin = [Fraction(int(s), l) for s in sys.column_sums()]
    return one_bin * (l - 1)


def mean_is_integral(sys: IncidenceSystem, l: int) -> bool:
    return bool(np.all(sys.column_sums() % l == 0))


def _target(sys: IncidenceSystem, l: int) -> np.ndarray:
    return np.tile(sys.column_sums() // l, l - 1).astype(np.int64)


def _batch_rows(num_blocks: int) -> int:
    return max(1, 2_000_000 // max(1, num_blocks))


def _chunk_statistics(M: np.ndarray, l: int, rng: np.random.Generator, size: int):
    """Yield X samples of one chunk in memory-bounded batches; bins drawn 0-based, bin l-1 is the last."""
    step = _batch_rows(M.shape[0])
    done = 0
    while done < size:
        b = min(step, size - done)
        taus = rng.integers(0, l, size=(b, M.shape[0]))
        yield np.concatenate([(taus == j).astype(np.int64) @ M for j in range(l - 1)], axis=1)
        done += b


def sample_statistics(sys: IncidenceSystem, l: int, trials: int, seed: Optional[int] = None,
                      chunk_trials: Optional[int] = None) -> np.ndarray:
    """trials x (l-1)|A| matrix of X samples, drawn from the documented chunk streams."""
    seed = config.DEFAULT_SEED if seed is None else seed
    size = chunk_trials or config.CHUNK_TRIALS
    if l == 1:
        return np.zeros((trials, 0), dtype=np.int64)
    out = []
    for i, start in enumerate(range(0, trials, size)):
        n = min(size, trials - start)
        out.extend(_chunk_statistics(sys.matrix, l, chunk_rng(seed, i), n))
    if not out:
        return np.zeros((0, (l - 1) * sys.num_columns), dtype=np.int64)
    return np.vstack(out)


@dataclass(frozen=True)
class MonteCarloResult:
    hits: int
    trials: int
    seed: int
    chunk_trials: int
    short_circuit: bool = False
    records: List[Tuple[int, int, int]] = field(default_factory=list, repr=False)

    @property
    def phat(self) -> float:
        return self.hits / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        if not self.trials:
            return 0.0
        p = self.phat
        return sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "trials": self.trials,
            "phat": self.phat,
            "stderr": self.stderr,
            "seed": self.seed,
            "chunk_trials": self.chunk_trials,
            "short_circuit": self.short_circuit,
            "chunks": len(self.records),
        }

    def chunk_records(self) -> List[dict]:
        return [{"start": s, "end": e, "hits": h} for s, e, h in self.records]


def _run_chunk(args) -> int:
    """Worker entry point: hits of one chunk (module level so Pool can pickle it)."""
    M, l, target, seed, index, size = args
    rng = chunk_rng(seed, index)
    return sum(int(np.all(X == target, axis=1).sum()) for X in _chunk_statistics(M, l, rng, size))


def monte_carlo_hit_probability(sys: IncidenceSystem, l: int, trials: int, seed: Optional[int] = None,
                                workers: int = 1, chunk_trials: Optional[int] = None,
                                progress: bool = False) -> MonteCarloResult:
    """Estimate Pr[X = E[X]] with exact integer comparison per trial."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    seed = config.DEFAULT_SEED if seed is None else seed
    size = chunk_trials or config.CHUNK_TRIALS

    if l == 1:
        return MonteCarloResult(trials, trials, seed, size, records=[(0, trials, trials)])
    if not mean_is_integral(sys, l):
        return MonteCarloResult(0, 0, seed, size, short_circuit=True)

    target = _target(sys, l)
    spans = [(start, min(start + size, trials)) for start in range(0, trials, size)]
    tasks = [(sys.matrix, l, target, seed, i, end - start) for i, (start, end) in enumerate(spans)]

    if workers > 1:
        with mp.Pool(processes=workers) as pool:
            chunk_hits = list(tqdm(pool.imap(_run_chunk, tasks), total=len(tasks),
                                   desc="chunks", disable=not progress))
    else:
        chunk_hits = [_run_chunk(task) for task in tqdm(tasks, desc="chunks", disable=not progress)]

    records = [(s, e, h) for (s, e), h in zip(spans, chunk_hits)]
    return MonteCarloResult(sum(chunk_hits), trials, seed, size, records=records)


def exact_hit_count(sys: IncidenceSystem, l: int, cap: Optional[int] = None) -> Tuple[int, int]:
    """(#assignments with X = E[X], l^|B|), by a convolution over blocks.

    The state after each block is the partial X of bins 1..l-1; when phi is
    nonnegative, states overshooting the target are dropped.
    """
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    cap = config.EXACT_CAP if cap is None else cap
    B = sys.num_blocks
    total = l ** B
    if total > cap:
        raise CapExceeded(f"l^|B| = {l}^{B} exceeds the exact-enumeration cap {cap}")
    if l == 1:
        return 1, 1
    if not mean_is_integral(sys, l):
        return 0, total

    A = sys.num_columns
    target = tuple(int(x) for x in _target(sys, l))
    nonneg = bool(sys.matrix.min() >= 0)
    zero = (0,) * ((l - 1) * A)
    states: Dict[tuple, int] = {zero: 1}
    for r in range(B):
        row = [int(x) for x in sys.matrix[r]]
        nxt: Dict[tuple, int] = {}
        for state, count in states.items():
            # bin l adds nothing
            nxt[state] = nxt.get(state, 0) + count
            for j in range(l - 1):
                moved = list(state)
                off = j * A
                for a in range(A):
                    moved[off + a] += row[a]
                if nonneg and any(moved[off + a] > target[off + a] for a in range(A)):
                    continue
                key = tuple(moved)
                nxt[key] = nxt.get(key, 0) + count
        states = nxt
    return states.get(target, 0), total


def exact_hit_probability(sys: IncidenceSystem, l: int, cap: Optional[int] = None) -> Fraction:
    hits, total = exact_hit_count(sys, l, cap)
    return Fraction(hits, total)
