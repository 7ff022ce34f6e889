"""CSV/JSON round-tripping of lower-limit tables, plus atomic file writes."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

from .engine import LowerLimitTable
from .errors import DomainError, PartitionError
from .space import SamplePoint, build_space, partition_from_scores

__all__ = [
    "table_to_csv",
    "table_from_csv",
    "table_to_json",
    "table_from_json",
    "load_table",
    "write_atomic",
]


def table_to_csv(table: LowerLimitTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "lower"])
    for p in table.space:
        w.writerow([p.x, p.y, f"{table.limits[p]:.6f}"])
    return buf.getvalue()


def _from_limits(limits: dict, alpha) -> LowerLimitTable:
    if not limits:
        raise PartitionError("table has no rows")
    n = max(p.x for p in limits)
    m = max(p.y for p in limits)
    try:
        space = build_space(n, m)
    except DomainError as exc:
        raise PartitionError(f"table rows do not form an (n, m) lattice: {exc}") from exc
    missing = [tuple(p) for p in space if p not in limits]
    if missing or len(limits) != len(space):
        raise PartitionError(f"table does not cover the {n}x{m} lattice; missing {missing}")
    # the limits themselves induce the ordering
    return LowerLimitTable(partition_from_scores(space, limits), alpha, limits)


def table_from_csv(text: str, alpha: float | None = None) -> LowerLimitTable:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(rows[0]) != {"x", "y", "lower"}:
        raise PartitionError("table CSV needs the header x,y,lower")
    limits = {}
    for r in rows:
        try:
            p = SamplePoint(int(r["x"]), int(r["y"]))
            v = float(r["lower"])
        except (TypeError, ValueError) as exc:
            raise PartitionError(f"bad table row {r}") from exc
        if p in limits:
            raise PartitionError(f"duplicate row for {tuple(p)}")
        limits[p] = v
    return _from_limits(limits, alpha)


def table_to_json(table: LowerLimitTable) -> str:
    return json.dumps({
        "shape": list(table.space.shape),
        "alpha": table.alpha,
        "partition": [[[p.x, p.y] for p in b] for b in table.partition.blocks],
        "limits": [[p.x, p.y, table.limits[p]] for p in table.space],
    }, indent=1)


def table_from_json(text: str) -> LowerLimitTable:
    try:
        raw = json.loads(text)
        limits = {SamplePoint(int(x), int(y)): float(v) for x, y, v in raw["limits"]}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise PartitionError(f"malformed table JSON: {exc}") from exc
    table = _from_limits(limits, raw.get("alpha"))
    if "partition" in raw:
        from .space import OrderedPartition

        part = OrderedPartition(table.space, tuple(tuple(SamplePoint(*p) for p in b) for b in raw["partition"]))
        table = LowerLimitTable(part, table.alpha, limits)
    return table


def load_table(path: str, alpha: float | None = None) -> LowerLimitTable:
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        table = table_from_json(text)
        if alpha is not None and table.alpha is None:
            table = LowerLimitTable(table.partition, alpha, table.limits)
        return table
    return table_from_csv(text, alpha)


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory and rename over ``path``."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
