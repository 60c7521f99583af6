"""
Exim mainlog lines: parsing, grouping by message ID, and a seeded generator
of synthetic logs with a ground-truth manifest.

A mainlog line starts with a ``YYYY-MM-DD HH:MM:SS`` timestamp, optionally
followed by a message ID of the form ``XXXXXX-XXXXXX-XX`` (base-62) and an
event flag: ``<=`` arrival, ``=>`` delivery, ``->`` additional delivery,
``==`` deferral, ``**`` failure, or the word ``Completed``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np


class EventFlag(Enum):
    ARRIVAL = "<="
    DELIVERY = "=>"
    ADDITIONAL_DELIVERY = "->"
    DEFERRAL = "=="
    FAILURE = "**"
    COMPLETED = "Completed"
    OTHER = "other"


_FLAG_TOKENS = {flag.value.encode(): flag for flag in EventFlag if flag is not EventFlag.OTHER}

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
TIMESTAMP_RE = re.compile(rb"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}")
MESSAGE_ID_RE = re.compile(rb"[0-9A-Za-z]{6}-[0-9A-Za-z]{6}-[0-9A-Za-z]{2}")

BASE62 = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class LogLine:
    raw: bytes
    timestamp: str | None = None
    message_id: str | None = None
    flag: EventFlag | None = None


@dataclass
class Transaction:
    id: str
    lines: list[LogLine] = field(default_factory=list)


class ManifestEntry(NamedTuple):
    line_count: int
    flags: tuple[EventFlag, ...]


def parse_line(line: bytes) -> LogLine:
    """
    Parses one mainlog line (without its newline). Never fails: anything not
    recognized is left as None, and ``raw`` always holds the input bytes.
    """
    timestamp = None
    rest = line
    if TIMESTAMP_RE.fullmatch(line[:19]):
        timestamp = line[:19].decode("ascii")
        rest = line[19:]

    tokens = rest.split()
    for position, token in enumerate(tokens):
        if MESSAGE_ID_RE.fullmatch(token):
            following = tokens[position + 1] if position + 1 < len(tokens) else b""
            flag = _FLAG_TOKENS.get(following, EventFlag.OTHER)
            return LogLine(
                raw=line,
                timestamp=timestamp,
                message_id=token.decode("ascii"),
                flag=flag,
            )

    return LogLine(raw=line, timestamp=timestamp)


def split_lines(data: bytes) -> list[bytes]:
    """LF-separated lines without their terminators; a final LF adds no line."""
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    return lines


def group_transactions(lines: Sequence[LogLine]) -> tuple[dict[str, Transaction], int]:
    """
    Groups id-bearing lines by message ID, in first-appearance order of the
    IDs and input order within each transaction.

    Returns
    -------
    tuple
        ``(transactions, skipped)`` where ``skipped`` counts id-less lines.
    """
    transactions: dict[str, Transaction] = dict()
    skipped = 0
    for line in lines:
        if line.message_id is None:
            skipped += 1
            continue
        transactions.setdefault(line.message_id, Transaction(line.message_id)).lines.append(line)
    return transactions, skipped


# Deliveries, additional deliveries and retries between arrival and Completed
_MIDDLE_EVENTS = (
    EventFlag.DELIVERY,
    EventFlag.ADDITIONAL_DELIVERY,
    EventFlag.DEFERRAL,
    EventFlag.FAILURE,
)
_MIDDLE_WEIGHTS = (0.55, 0.25, 0.12, 0.08)
MAX_MIDDLE_EVENTS = 4
NOISE_FRACTION = 0.1
MIN_NOISE_LINES = 3
LOG_START = datetime(2010, 1, 1, 9, 0, 0)

_USERS = ("alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi")
_DOMAINS = ("example.com", "example.net", "example.org", "mail.test")


def _random_id(rng: np.random.Generator) -> str:
    picks = rng.integers(0, len(BASE62), size=14)
    chars = bytes(BASE62[i] for i in picks).decode("ascii")
    return f"{chars[:6]}-{chars[6:12]}-{chars[12:]}"


def _address(rng: np.random.Generator) -> str:
    return "{}@{}".format(_USERS[rng.integers(len(_USERS))], _DOMAINS[rng.integers(len(_DOMAINS))])


def _event_text(flag: EventFlag, message_id: str, rng: np.random.Generator) -> str:
    host = f"[10.{rng.integers(256)}.{rng.integers(256)}.{rng.integers(1, 255)}]"
    if flag is EventFlag.ARRIVAL:
        size = rng.integers(500, 200_000)
        return f"{message_id} <= {_address(rng)} H=relay.example.com {host} P=esmtp S={size}"
    if flag is EventFlag.DELIVERY:
        return f"{message_id} => {_address(rng)} R=dnslookup T=remote_smtp H=mx.example.net {host}"
    if flag is EventFlag.ADDITIONAL_DELIVERY:
        return f"{message_id} -> {_address(rng)} R=dnslookup T=remote_smtp H=mx.example.net {host}"
    if flag is EventFlag.DEFERRAL:
        return f"{message_id} == {_address(rng)} R=dnslookup T=remote_smtp defer (-44): SMTP error"
    if flag is EventFlag.FAILURE:
        return f"{message_id} ** {_address(rng)} R=dnslookup T=remote_smtp: 550 unknown user"
    return f"{message_id} Completed"


def _noise_text(rng: np.random.Generator) -> str:
    pid = rng.integers(1000, 65000)
    choice = rng.integers(4)
    if choice == 0:
        return f"Start queue run: pid={pid}"
    if choice == 1:
        return f"End queue run: pid={pid}"
    if choice == 2:
        return f"exim 4.92 daemon started: pid={pid}, -q30m, listening for SMTP on port 25"
    return f"SMTP connection from relay.example.com [10.0.0.{rng.integers(1, 255)}] lost"


def generate_log(transactions: int, seed: int = 0) -> tuple[bytes, dict[str, ManifestEntry]]:
    """
    Generates a deterministic mainlog with ``transactions`` distinct message IDs.

    Every transaction has an arrival, zero to ``MAX_MIDDLE_EVENTS`` delivery or
    retry events and a Completed line. Transactions are interleaved while
    keeping each one's order, and roughly ``NOISE_FRACTION`` of the lines (at
    least ``MIN_NOISE_LINES``) carry no message ID.

    Returns
    -------
    tuple
        ``(log bytes, manifest)``; the manifest maps every ID to its line
        count and ordered flags, in ID creation order.
    """
    if transactions < 0:
        raise ValueError(f"transaction count must be >= 0, got {transactions}")
    rng = np.random.default_rng(seed)

    manifest: dict[str, ManifestEntry] = dict()
    while len(manifest) < transactions:
        message_id = _random_id(rng)
        if message_id in manifest:
            continue
        middle = rng.choice(len(_MIDDLE_EVENTS), size=rng.integers(0, MAX_MIDDLE_EVENTS + 1), p=_MIDDLE_WEIGHTS)
        flags = (
            EventFlag.ARRIVAL,
            *(_MIDDLE_EVENTS[i] for i in middle),
            EventFlag.COMPLETED,
        )
        manifest[message_id] = ManifestEntry(len(flags), flags)

    ids = list(manifest)
    # one slot per line, -1 marks a noise line; shuffling keeps per-id order
    slots = [k for k, message_id in enumerate(ids) for _ in range(manifest[message_id].line_count)]
    noise = max(MIN_NOISE_LINES, round(len(slots) * NOISE_FRACTION))
    slots.extend([-1] * noise)
    order = rng.permutation(len(slots))

    cursor = [0] * len(ids)
    clock = LOG_START
    lines = []
    for slot in order:
        owner = slots[slot]
        clock += timedelta(seconds=int(rng.integers(0, 3)))
        stamp = clock.strftime(TIMESTAMP_FORMAT)
        if owner < 0:
            lines.append(f"{stamp} {_noise_text(rng)}")
            continue
        message_id = ids[owner]
        flag = manifest[message_id].flags[cursor[owner]]
        cursor[owner] += 1
        lines.append(f"{stamp} {_event_text(flag, message_id, rng)}")

    log = "".join(line + "\n" for line in lines).encode("ascii")
    return log, manifest
