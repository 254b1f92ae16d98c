"""Parsing and validation of transaction trace files.

Canonical trace formats:

* CSV with header ``timestamp,block,from,from_kind,to,to_kind,call_kind,tx_id``
* JSONL, one object per line with the same keys

Addresses are 40 hex digits (an optional ``0x`` prefix is stripped and the
string lowercased on input). ``.gz`` files are decompressed transparently.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator

log = logging.getLogger(__name__)

CSV_HEADER = ["timestamp", "block", "from", "from_kind", "to", "to_kind", "call_kind", "tx_id"]


class VertexKind(Enum):
    ACCOUNT = "account"
    CONTRACT = "contract"


class CallKind(Enum):
    TRANSFER = "transfer"
    CONTRACT_CALL = "contractcall"
    CONTRACT_CREATE = "contractcreate"


class TraceError(Exception):
    """Base class for trace parsing/validation failures."""


class MalformedRow(TraceError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class OutOfOrderBlock(TraceError):
    def __init__(self, line_no: int, block: int, previous: int):
        super().__init__(f"line {line_no}: block {block} after block {previous}")
        self.line_no = line_no
        self.block = block
        self.previous = previous


class KindConflict(TraceError):
    def __init__(self, vertex: str, seen: "VertexKind", now: "VertexKind"):
        super().__init__(f"vertex {vertex} seen as {seen.value}, now {now.value}")
        self.vertex = vertex


class UseBeforeCreate(TraceError):
    def __init__(self, vertex: str):
        super().__init__(f"contract {vertex} used before its create record")
        self.vertex = vertex


def canonical_address(raw: str) -> str:
    """Lowercase 40-hex-digit form of an address; raises ValueError otherwise."""
    s = raw.strip().lower()
    if s.startswith("0x"):
        s = s[2:]
    if len(s) != 40:
        raise ValueError(f"address {raw!r} is not 40 hex digits")
    int(s, 16)  # raises ValueError on non-hex
    return s


@dataclass(frozen=True)
class TraceRecord:
    """One caller->callee interaction extracted from a transaction."""

    timestamp: int
    block: int
    src: str
    src_kind: VertexKind
    dst: str
    dst_kind: VertexKind
    call_kind: CallKind
    tx_id: str


@dataclass
class ParseStats:
    data_rows: int = 0
    yielded: int = 0
    skipped: int = 0
    warnings: int = 0


def _record_from_fields(fields: dict, line_no: int) -> TraceRecord:
    try:
        timestamp = int(fields["timestamp"])
        block = int(fields["block"])
        src = canonical_address(str(fields["from"]))
        dst = canonical_address(str(fields["to"]))
        src_kind = VertexKind(str(fields["from_kind"]).strip().lower())
        dst_kind = VertexKind(str(fields["to_kind"]).strip().lower())
        tx_id = str(fields["tx_id"])
    except (KeyError, ValueError) as exc:
        raise MalformedRow(line_no, str(exc)) from exc
    try:
        call_kind = CallKind(str(fields["call_kind"]).strip().lower())
    except ValueError as exc:
        raise MalformedRow(line_no, f"unknown call kind {fields.get('call_kind')!r}") from exc
    if timestamp < 0 or block < 0:
        raise MalformedRow(line_no, "negative timestamp or block")
    if call_kind is CallKind.CONTRACT_CREATE and dst_kind is not VertexKind.CONTRACT:
        raise MalformedRow(line_no, "contractcreate target must be a contract")
    return TraceRecord(timestamp, block, src, src_kind, dst, dst_kind, call_kind, tx_id)


def parse_trace(
    stream: IO[str],
    format: str = "csv",
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[TraceRecord]:
    """Yield records from a CSV or JSONL trace stream in file order.

    In strict mode any malformed row or decreasing block number aborts; in
    lenient mode bad rows are skipped and counted in ``stats``.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown trace format {format!r}")
    if stats is None:
        stats = ParseStats()

    def rows() -> Iterator[tuple[int, dict]]:
        if format == "csv":
            reader = csv.reader(stream)
            try:
                header = next(reader)
            except StopIteration:
                return
            if [h.strip().lower() for h in header] != CSV_HEADER:
                raise MalformedRow(1, f"bad header {header!r}, expected {','.join(CSV_HEADER)}")
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(CSV_HEADER):
                    yield line_no, {"__error__": f"expected {len(CSV_HEADER)} fields, got {len(row)}"}
                    continue
                yield line_no, dict(zip(CSV_HEADER, row))
        else:
            for line_no, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield line_no, {"__error__": f"bad json: {exc}"}
                    continue
                if not isinstance(obj, dict):
                    yield line_no, {"__error__": "record is not an object"}
                    continue
                yield line_no, obj

    last_block = -1
    for line_no, fields in rows():
        stats.data_rows += 1
        try:
            if "__error__" in fields:
                raise MalformedRow(line_no, fields["__error__"])
            record = _record_from_fields(fields, line_no)
            if record.block < last_block:
                raise OutOfOrderBlock(line_no, record.block, last_block)
        except TraceError as exc:
            if strict:
                raise
            stats.skipped += 1
            log.warning("skipping row: %s", exc)
            continue
        last_block = record.block
        stats.yielded += 1
        yield record


def serialize_trace(records: Iterable[TraceRecord], format: str = "csv") -> str:
    """Inverse of parse_trace on canonical records (round-trip identity)."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [r.timestamp, r.block, r.src, r.src_kind.value, r.dst, r.dst_kind.value, r.call_kind.value, r.tx_id]
            )
        return buf.getvalue()
    if format == "jsonl":
        lines = []
        for r in records:
            lines.append(
                json.dumps(
                    {
                        "timestamp": r.timestamp,
                        "block": r.block,
                        "from": r.src,
                        "from_kind": r.src_kind.value,
                        "to": r.dst,
                        "to_kind": r.dst_kind.value,
                        "call_kind": r.call_kind.value,
                        "tx_id": r.tx_id,
                    },
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")
    raise ValueError(f"unknown trace format {format!r}")


def infer_format(path: str) -> str:
    name = path[:-3] if path.endswith(".gz") else path
    if name.endswith(".jsonl") or name.endswith(".ndjson"):
        return "jsonl"
    return "csv"


def open_trace(path: str) -> IO[str]:
    if path.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def read_trace(
    path: str,
    format: str | None = None,
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[TraceRecord]:
    """Open a trace file (gzip by extension) and yield its records."""
    fmt = format or infer_format(path)
    with open_trace(path) as fh:
        yield from parse_trace(fh, fmt, strict=strict, stats=stats)


def validate_kinds(
    records: Iterable[TraceRecord],
    strict: bool = True,
    stats: ParseStats | None = None,
) -> Iterator[TraceRecord]:
    """Check full-trace kind invariants while passing records through.

    Every vertex must keep a single kind, and a contract's create record must
    precede any other use of it. In lenient mode violations are logged as
    warnings (real chains can break the assumptions at fork boundaries).
    """
    kinds: dict[str, VertexKind] = {}
    created: set[str] = set()
    seen: set[str] = set()
    for r in records:
        for vertex, kind in ((r.src, r.src_kind), (r.dst, r.dst_kind)):
            prior = kinds.get(vertex)
            if prior is None:
                kinds[vertex] = kind
            elif prior is not kind:
                err = KindConflict(vertex, prior, kind)
                if strict:
                    raise err
                if stats is not None:
                    stats.warnings += 1
                log.warning("%s", err)
        if r.call_kind is CallKind.CONTRACT_CREATE:
            if r.dst in seen:
                err = UseBeforeCreate(r.dst)
                if strict:
                    raise err
                if stats is not None:
                    stats.warnings += 1
                log.warning("%s", err)
            created.add(r.dst)
        seen.add(r.src)
        seen.add(r.dst)
        yield r
