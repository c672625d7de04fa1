# src/search/backtrack.py
"""
Backtracking search for designs and large sets at desk scale.

Design search is exact cover with multiplicity: pick the unfinished t-set with
the fewest candidate blocks, then branch "take b_i, drop b_1..b_{i-1}" so each
design is reached once.

Large-set search assigns blocks to bins. Every unassigned block keeps the
bitmask of bins it still fits; every (bin, t-set) keeps how many blocks cover
it and how many unassigned blocks could still cover it. A branch dies when a
block has no bin left or a (bin, t-set) can no longer reach lambda; when a
(bin, t-set) has exactly as many supporters as it still needs, they are all
placed. With symmetry breaking a block may open only the lowest empty bin.

Outcomes: found (always re-verified), exhausted (the whole space was searched),
budget_exceeded (never read as nonexistence).
"""
import time
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.common import config
from src.probmodel.process import CapExceeded
from src.setsys.colex import iter_colex, rank_colex
from src.setsys.divisibility import (
    check_design_divisibility,
    check_largeset_divisibility,
    lambda_of,
)
from src.setsys.incidence import InstanceParams, ParameterError, validate_nkt
from src.verify.checks import verify_design, verify_large_set
from src.verify.design_files import Design, LargeSetPartition

STRATEGIES = ("exhaustive", "restart")
BLOCK_ORDERS = ("dynamic", "colex", "random")

FOUND = "found"
EXHAUSTED = "exhausted"
BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class SearchConfig:
    strategy: str = "exhaustive"
    budget_nodes: int = config.BUDGET_NODES
    budget_seconds: float = config.BUDGET_SECONDS
    seed: int = config.DEFAULT_SEED
    block_order: str = "dynamic"
    restart_nodes: int = config.RESTART_NODES
    symmetry_breaking: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.block_order not in BLOCK_ORDERS:
            raise ParameterError(f"block order must be one of {BLOCK_ORDERS}, got {self.block_order!r}")
        if self.budget_nodes < 1 or self.budget_seconds <= 0 or self.restart_nodes < 1:
            raise ParameterError("budgets must be positive")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "budget_nodes": self.budget_nodes,
            "budget_seconds": self.budget_seconds,
            "seed": self.seed,
            "block_order": self.block_order,
            "restart_nodes": self.restart_nodes,
            "symmetry_breaking": self.symmetry_breaking,
        }


@dataclass
class SearchOutcome:
    status: str
    result: object = None
    nodes: int = 0
    restarts: int = 0
    reason: Optional[str] = None
    count: Optional[int] = None
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def to_dict(self) -> dict:
        # elapsed stays out so reports are byte-identical across runs
        d = {"status": self.status, "nodes": self.nodes, "restarts": self.restarts}
        if self.reason is not None:
            d["reason"] = self.reason
        if self.count is not None:
            d["count"] = self.count
        d.update(self.details)
        if isinstance(self.result, list):
            d["result"] = [r.to_dict() if hasattr(r, "to_dict") else list(r) for r in self.result]
        elif self.result is not None:
            d["result"] = self.result.to_dict()
        return d


class _BudgetSpent(Exception):
    pass


class _Restart(Exception):
    pass


class _Budget:
    def __init__(self, cfg: SearchConfig):
        self.max_nodes = cfg.budget_nodes
        self.deadline = time.monotonic() + cfg.budget_seconds
        self.nodes = 0
        self.attempt_start = 0
        self.attempt_limit: Optional[int] = None

    def begin_attempt(self, limit: Optional[int]):
        self.attempt_start = self.nodes
        self.attempt_limit = limit

    def tick(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise _BudgetSpent("node budget")
        if not self.nodes & 1023 and time.monotonic() > self.deadline:
            raise _BudgetSpent("time budget")
        if self.attempt_limit is not None and self.nodes - self.attempt_start > self.attempt_limit:
            raise _Restart()


def _drive(run_attempt: Callable[[np.ndarray, _Budget], bool], num_blocks: int,
           cfg: SearchConfig, started: float) -> SearchOutcome:
    """Run attempts until one finishes; restarts reshuffle the block priority."""
    budget = _Budget(cfg)
    rng = np.random.default_rng(cfg.seed)
    if cfg.block_order == "random":
        pos = rng.permutation(num_blocks)
    else:
        pos = np.arange(num_blocks)
    restarts = 0
    while True:
        budget.begin_attempt(cfg.restart_nodes if cfg.strategy == "restart" else None)
        try:
            found = run_attempt(pos, budget)
        except _Restart:
            restarts += 1
            pos = rng.permutation(num_blocks)
            continue
        except _BudgetSpent as e:
            return SearchOutcome(BUDGET_EXCEEDED, nodes=budget.nodes, restarts=restarts,
                                 reason=str(e), elapsed=time.monotonic() - started)
        status = FOUND if found else EXHAUSTED
        return SearchOutcome(status, nodes=budget.nodes, restarts=restarts,
                             elapsed=time.monotonic() - started)


def _tset_tables(n: int, k: int, t: int):
    blocks = list(iter_colex(n, k))
    block_tsets = [[rank_colex(a) for a in combinations(b, t)] for b in blocks]
    tset_blocks: List[List[int]] = [[] for _ in range(comb(n, t))]
    for r, tsets in enumerate(block_tsets):
        for a in tsets:
            tset_blocks[a].append(r)
    return blocks, block_tsets, tset_blocks


# --------------------------------------------------------------------------
# designs
# --------------------------------------------------------------------------

class _DesignSearch:
    def __init__(self, n: int, k: int, t: int, lam: int):
        self.lam = lam
        self.blocks, self.bt, self.tb = _tset_tables(n, k, t)
        self.num_tsets = len(self.tb)
        self.solutions: List[Tuple[int, ...]] = []
        self.stop_after: Optional[int] = 1
        self.cap: Optional[int] = None
        self.on_solution: Optional[Callable[[], None]] = None

    def run(self, pos: np.ndarray, budget: _Budget) -> bool:
        self.pos, self.budget = pos, budget
        self.solutions = []
        status = [0] * len(self.blocks)          # 0 open, 1 taken, -1 dropped
        cnt = [0] * self.num_tsets
        avail = [len(bs) for bs in self.tb]
        return self._solve(status, cnt, avail)

    def _drop(self, status, avail, b):
        status[b] = -1
        for a in self.bt[b]:
            avail[a] -= 1

    def _take(self, status, cnt, avail, b):
        status[b] = 1
        for a in self.bt[b]:
            avail[a] -= 1
            cnt[a] += 1
        for a in self.bt[b]:
            if cnt[a] == self.lam:
                for b2 in self.tb[a]:
                    if status[b2] == 0:
                        self._drop(status, avail, b2)

    def _solve(self, status, cnt, avail) -> bool:
        self.budget.tick()
        best, best_avail = None, None
        for a in range(self.num_tsets):
            need = self.lam - cnt[a]
            if need > 0:
                if avail[a] < need:
                    return False
                if best is None or avail[a] < best_avail:
                    best, best_avail = a, avail[a]
        if best is None:
            return self._record(status)

        cands = sorted((b for b in self.tb[best] if status[b] == 0), key=lambda b: self.pos[b])
        for i, b in enumerate(cands):
            s2, c2, a2 = status[:], cnt[:], avail[:]
            for prev in cands[:i]:
                self._drop(s2, a2, prev)
            self._take(s2, c2, a2, b)
            if self._solve(s2, c2, a2):
                return True
        return False

    def _record(self, status) -> bool:
        self.solutions.append(tuple(r for r, s in enumerate(status) if s == 1))
        if self.cap is not None and len(self.solutions) > self.cap:
            raise CapExceeded(f"more than {self.cap} designs; raise the design cap")
        if self.on_solution is not None:
            self.on_solution()
        return self.stop_after is not None and len(self.solutions) >= self.stop_after


def search_design(n: int, k: int, t: int, lam: int, cfg: Optional[SearchConfig] = None) -> SearchOutcome:
    cfg = cfg or SearchConfig()
    started = time.monotonic()
    report = check_design_divisibility(n, k, t, lam)
    if not report.passed:
        bad = report.first_failure()
        return SearchOutcome(EXHAUSTED, reason="divisibility",
                             details={"failed_check": bad.to_dict()})

    engine = _DesignSearch(n, k, t, lam)
    outcome = _drive(engine.run, len(engine.blocks), cfg, started)
    if outcome.found:
        design = Design(n, k, t, lam, tuple(engine.blocks[r] for r in engine.solutions[0]))
        if not verify_design(design).passed:
            raise RuntimeError("design search produced a block set that fails verification")
        outcome.result = design
    config.log(f"search-design ({n},{k},{t},{lam}): {outcome.status} after {outcome.nodes} nodes")
    return outcome


def enumerate_designs(n: int, k: int, t: int, lam: int, cfg: Optional[SearchConfig] = None,
                      cap: Optional[int] = None, progress: bool = False) -> SearchOutcome:
    """Every t-(n,k,lam) design, as tuples of colex block ranks (status exhausted = complete list)."""
    cfg = cfg or SearchConfig()
    started = time.monotonic()
    validate_nkt(n, k, t)
    if not check_design_divisibility(n, k, t, lam).passed:
        return SearchOutcome(EXHAUSTED, result=[], count=0, reason="divisibility")

    engine = _DesignSearch(n, k, t, lam)
    engine.stop_after = None
    engine.cap = config.DESIGN_CAP if cap is None else cap
    bar = tqdm(desc="designs", unit="design", disable=not progress)
    engine.on_solution = lambda: bar.update(1)
    try:
        outcome = _drive(engine.run, len(engine.blocks), SearchConfig(
            strategy="exhaustive", budget_nodes=cfg.budget_nodes, budget_seconds=cfg.budget_seconds,
            seed=cfg.seed, block_order=cfg.block_order), started)
    finally:
        bar.close()
    if outcome.status == EXHAUSTED:
        outcome.result = list(engine.solutions)
        outcome.count = len(engine.solutions)
    return outcome


def _max_clique(sets: Sequence[frozenset], bound: int) -> List[int]:
    best: List[int] = []

    def expand(clique: List[int], cands: List[int]):
        nonlocal best
        if len(clique) > len(best):
            best = clique[:]
        if len(best) >= bound or len(clique) + len(cands) <= len(best):
            return
        for i, d in enumerate(cands):
            rest = [c for c in cands[i + 1:] if sets[c].isdisjoint(sets[d])]
            clique.append(d)
            expand(clique, rest)
            clique.pop()
            if len(best) >= bound:
                return

    expand([], list(range(len(sets))))
    return best


def max_disjoint_designs(n: int, k: int, t: int, lam: int, cfg: Optional[SearchConfig] = None,
                         cap: Optional[int] = None, progress: bool = False) -> SearchOutcome:
    """Largest family of pairwise block-disjoint designs, exact after full enumeration."""
    listing = enumerate_designs(n, k, t, lam, cfg, cap, progress)
    if listing.status != EXHAUSTED:
        return listing
    bound = comb(n - t, k - t) // lam
    designs = listing.result
    best = _max_clique([frozenset(d) for d in designs], bound)
    blocks = list(iter_colex(n, k))
    witnesses = [Design(n, k, t, lam, tuple(blocks[r] for r in designs[i])) for i in best]
    status = FOUND if witnesses else EXHAUSTED
    config.log(f"max-disjoint ({n},{k},{t},{lam}): {len(designs)} designs, at most {len(best)} disjoint")
    return SearchOutcome(status, result=witnesses, nodes=listing.nodes, count=len(best),
                         elapsed=listing.elapsed,
                         details={"designs_enumerated": len(designs), "upper_bound": bound})


# --------------------------------------------------------------------------
# large sets
# --------------------------------------------------------------------------

class _LSState:
    __slots__ = ("bin_of", "dom", "cnt", "sup", "size", "left")

    def copy(self) -> "_LSState":
        s = _LSState.__new__(_LSState)
        s.bin_of = self.bin_of[:]
        s.dom = self.dom[:]
        s.cnt = self.cnt[:]
        s.sup = self.sup[:]
        s.size = self.size[:]
        s.left = self.left
        return s


class _LargeSetSearch:
    def __init__(self, params: InstanceParams, lam: int, block_order: str,
                 symmetry_breaking: bool, counting: bool = False):
        self.l, self.lam = params.l, lam
        self.blocks, self.bt, self.tb = _tset_tables(params.n, params.k, params.t)
        self.A = len(self.tb)
        self.dynamic = block_order == "dynamic"
        self.symmetry = symmetry_breaking and not counting
        self.counting = counting
        self.count = 0
        self.solution: Optional[List[int]] = None

    def initial(self) -> _LSState:
        s = _LSState()
        B = len(self.blocks)
        s.bin_of = [-1] * B
        s.dom = [(1 << self.l) - 1] * B
        s.cnt = [0] * (self.l * self.A)
        s.sup = [len(self.tb[a]) for _ in range(self.l) for a in range(self.A)]
        s.size = [0] * self.l
        s.left = B
        return s

    def _propagate(self, s: _LSState, queue: List[Tuple[int, int]]) -> bool:
        A, lam, l = self.A, self.lam, self.l
        while True:
            while queue:
                b, j = queue.pop()
                if s.bin_of[b] != -1:
                    if s.bin_of[b] != j:
                        return False
                    continue
                d = s.dom[b]
                if not d >> j & 1:
                    return False
                for jj in range(l):
                    if d >> jj & 1:
                        base = jj * A
                        for a in self.bt[b]:
                            s.sup[base + a] -= 1
                s.dom[b] = 0
                s.bin_of[b] = j
                s.size[j] += 1
                s.left -= 1
                base, bit = j * A, 1 << j
                for a in self.bt[b]:
                    s.cnt[base + a] += 1
                    if s.cnt[base + a] != lam:
                        continue
                    # bin j is closed for every other block through a
                    for b2 in self.tb[a]:
                        d2 = s.dom[b2]
                        if d2 & bit:
                            d2 &= ~bit
                            s.dom[b2] = d2
                            for a2 in self.bt[b2]:
                                s.sup[base + a2] -= 1
                            if not d2:
                                return False
                            if not d2 & (d2 - 1):
                                queue.append((b2, d2.bit_length() - 1))
            for j in range(l):
                base, bit = j * A, 1 << j
                for a in range(A):
                    c = s.cnt[base + a]
                    if c >= lam:
                        continue
                    slack = c + s.sup[base + a] - lam
                    if slack < 0:
                        return False
                    if slack == 0:
                        queue.extend((b2, j) for b2 in self.tb[a] if s.dom[b2] & bit)
            if not queue:
                return True

    def _pick_block(self, s: _LSState) -> int:
        best, key = -1, None
        for b in self.order:
            d = s.dom[b]
            if not d:
                continue
            if not self.dynamic:
                return b
            size = bin(d).count("1")
            if key is None or size < key:
                best, key = b, size
                if size <= 2:
                    break
        return best

    def run(self, pos: np.ndarray, budget: _Budget) -> bool:
        self.budget = budget
        self.order = sorted(range(len(self.blocks)), key=lambda b: pos[b])
        self.count = 0
        self.solution = None
        s = self.initial()
        if not self._propagate(s, []):
            return False
        return self._solve(s)

    def _solve(self, s: _LSState) -> bool:
        self.budget.tick()
        if s.left == 0:
            if self.counting:
                self.count += 1
                return False
            self.solution = s.bin_of[:]
            return True
        b = self._pick_block(s)
        d = s.dom[b]
        bins = [j for j in range(self.l) if d >> j & 1]
        if self.symmetry:
            first_empty = next((j for j in bins if s.size[j] == 0), None)
            bins = [j for j in bins if s.size[j] > 0 or j == first_empty]
        for j in bins:
            child = s.copy()
            if self._propagate(child, [(b, j)]) and self._solve(child):
                return True
        return False

    def partition(self, params: InstanceParams) -> LargeSetPartition:
        parts = [[] for _ in range(self.l)]
        for r, j in enumerate(self.solution):
            parts[j].append(self.blocks[r])
        return LargeSetPartition(params, tuple(tuple(p) for p in parts))


def _divisibility_outcome(params: InstanceParams) -> Optional[SearchOutcome]:
    report = check_largeset_divisibility(params)
    if report.passed:
        return None
    return SearchOutcome(EXHAUSTED, reason="divisibility",
                         details={"failed_check": report.first_failure().to_dict()})


def search_large_set(params: InstanceParams, cfg: Optional[SearchConfig] = None) -> SearchOutcome:
    cfg = cfg or SearchConfig()
    started = time.monotonic()
    early = _divisibility_outcome(params)
    if early is not None:
        return early
    lam = lambda_of(params)

    engine = _LargeSetSearch(params, lam, cfg.block_order, cfg.symmetry_breaking)
    outcome = _drive(engine.run, len(engine.blocks), cfg, started)
    if outcome.found:
        ls = engine.partition(params)
        if not verify_large_set(ls).passed:
            raise RuntimeError("large-set search produced a partition that fails verification")
        outcome.result = ls
    config.log(
        f"search-largeset {params.to_dict()}: {outcome.status} after {outcome.nodes} nodes, "
        f"{outcome.restarts} restart(s), {outcome.elapsed:.1f}s"
    )
    return outcome


def count_large_sets(params: InstanceParams, cfg: Optional[SearchConfig] = None) -> SearchOutcome:
    """Number of large sets with ordered parts; exhaustive, no symmetry breaking."""
    cfg = cfg or SearchConfig()
    started = time.monotonic()
    early = _divisibility_outcome(params)
    if early is not None:
        early.count = 0
        return early
    lam = lambda_of(params)

    engine = _LargeSetSearch(params, lam, cfg.block_order, symmetry_breaking=False, counting=True)
    exhaustive = SearchConfig(strategy="exhaustive", budget_nodes=cfg.budget_nodes,
                              budget_seconds=cfg.budget_seconds, seed=cfg.seed,
                              block_order=cfg.block_order, symmetry_breaking=False)
    outcome = _drive(engine.run, len(engine.blocks), exhaustive, started)
    if outcome.status == EXHAUSTED:
        outcome.count = engine.count
    return outcome
