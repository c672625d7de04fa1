# src/verify/design_files.py
"""
Designs and large sets, plus their JSON files.

Design file:    {"n":int,"k":int,"t":int,"lambda":int,"blocks":[[int,...],...]}
Large-set file: {"n":int,"k":int,"t":int,"l":int,"parts":[[[int,...],...],...]}

Elements are 1-based and each block must be strictly increasing in the file;
in memory blocks are sorted tuples of 0-based elements.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from src.common.jsonio import load_json
from src.setsys.colex import from_one_based, to_one_based
from src.setsys.incidence import InstanceParams, validate_nkt

Block = Tuple[int, ...]


class DesignFileError(ValueError):
    def __init__(self, path, position: str, message: str):
        self.path = str(path)
        self.position = position
        super().__init__(f"{self.path}: {position}: {message}")


@dataclass(frozen=True)
class Design:
    n: int
    k: int
    t: int
    lam: int
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        validate_nkt(self.n, self.k, self.t)
        for b in self.blocks:
            check_block(b, self.n, self.k)

    def to_dict(self) -> dict:
        return design_to_dict(self)


@dataclass(frozen=True)
class LargeSetPartition:
    params: InstanceParams
    parts: Tuple[Tuple[Block, ...], ...]

    def __post_init__(self):
        for part in self.parts:
            for b in part:
                check_block(b, self.params.n, self.params.k)

    def to_dict(self) -> dict:
        return largeset_to_dict(self)


def check_block(block: Sequence[int], n: int, k: int):
    """Raise ValueError unless block is a strictly increasing 0-based k-subset of range(n)."""
    if len(block) != k:
        raise ValueError(f"block {to_one_based(block)} has size {len(block)}, expected {k}")
    for i, x in enumerate(block):
        if not 0 <= x < n:
            raise ValueError(f"block {to_one_based(block)} has element {x + 1} outside 1..{n}")
        if i and block[i - 1] >= x:
            raise ValueError(f"block {to_one_based(block)} is not strictly increasing")


def design_to_dict(design: Design) -> dict:
    return {
        "n": design.n,
        "k": design.k,
        "t": design.t,
        "lambda": design.lam,
        "blocks": [to_one_based(b) for b in design.blocks],
    }


def largeset_to_dict(ls: LargeSetPartition) -> dict:
    p = ls.params
    return {
        "n": p.n,
        "k": p.k,
        "t": p.t,
        "l": p.l,
        "parts": [[to_one_based(b) for b in part] for part in ls.parts],
    }


def _int_field(raw: dict, name: str, path) -> int:
    if name not in raw:
        raise DesignFileError(path, name, "missing field")
    value = raw[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise DesignFileError(path, name, f"expected an integer, got {value!r}")
    return value


def _parse_blocks(raw_blocks, n: int, k: int, path, where: str) -> List[Block]:
    if not isinstance(raw_blocks, list):
        raise DesignFileError(path, where, "expected an array of blocks")
    blocks = []
    for i, raw in enumerate(raw_blocks):
        pos = f"{where}[{i}]"
        if not isinstance(raw, list):
            raise DesignFileError(path, pos, "expected an array of integers")
        if len(raw) != k:
            raise DesignFileError(path, pos, f"block has {len(raw)} elements, expected k={k}")
        for j, x in enumerate(raw):
            if isinstance(x, bool) or not isinstance(x, int):
                raise DesignFileError(path, f"{pos}[{j}]", f"expected an integer, got {x!r}")
            if not 1 <= x <= n:
                raise DesignFileError(path, f"{pos}[{j}]", f"element {x} out of range 1..{n}")
            if j and raw[j - 1] >= x:
                raise DesignFileError(path, f"{pos}[{j}]", "elements not strictly increasing")
        blocks.append(from_one_based(raw))
    return blocks


def parse_design(raw: dict, path="<design>") -> Design:
    if not isinstance(raw, dict):
        raise DesignFileError(path, "$", "expected a JSON object")
    n, k, t = (_int_field(raw, f, path) for f in ("n", "k", "t"))
    lam = _int_field(raw, "lambda", path)
    try:
        validate_nkt(n, k, t)
    except ValueError as e:
        raise DesignFileError(path, "n/k/t", str(e)) from e
    if lam < 1:
        raise DesignFileError(path, "lambda", f"lambda must be >= 1, got {lam}")
    blocks = _parse_blocks(raw.get("blocks"), n, k, path, "blocks")
    return Design(n, k, t, lam, tuple(blocks))


def parse_large_set(raw: dict, path="<large set>") -> LargeSetPartition:
    if not isinstance(raw, dict):
        raise DesignFileError(path, "$", "expected a JSON object")
    n, k, t, l = (_int_field(raw, f, path) for f in ("n", "k", "t", "l"))
    try:
        params = InstanceParams(n, k, t, l)
    except ValueError as e:
        raise DesignFileError(path, "n/k/t/l", str(e)) from e
    raw_parts = raw.get("parts")
    if not isinstance(raw_parts, list):
        raise DesignFileError(path, "parts", "expected an array of parts")
    parts = tuple(
        tuple(_parse_blocks(p, n, k, path, f"parts[{i}]")) for i, p in enumerate(raw_parts)
    )
    return LargeSetPartition(params, parts)


def load_design(path) -> Design:
    return parse_design(load_json(path), path)


def load_large_set(path) -> LargeSetPartition:
    return parse_large_set(load_json(path), path)
