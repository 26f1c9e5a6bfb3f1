"""Periodic fatigue survey flow, self-report trend aggregation, concern
escalation tickets, and comparison of automated flags against
self-reports.

Self-reports never feed a formal drowsiness rating; they gate break
suggestions and supervisor outreach only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

__all__ = [
    "ALERTNESS_TIPS",
    "ConcernChannel",
    "ConcernStatus",
    "ConcernTicket",
    "DmsVsPfsReport",
    "PfsAction",
    "PfsOutcome",
    "PfsRecord",
    "TrendSummary",
    "advance_concern",
    "concern_from_record",
    "cross_check_dms_vs_pfs",
    "open_concern",
    "pfs_trend",
    "submit_pfs",
    "trend_to_csv",
]

KSS_BREAK_THRESHOLD = 6

ALERTNESS_TIPS = (
    "take a short walk",
    "light stretching",
    "step outside for fresh air",
    "have a conversation with support",
    "adjust cabin temperature or music",
    "hydrate",
)


class PfsAction(str, Enum):
    NONE = "none"
    SUGGEST_BREAK_AND_FOLLOWUP = "suggest_break_and_followup"
    SUPERVISOR_OUTREACH = "supervisor_outreach"


@dataclass(frozen=True)
class PfsRecord:
    record_id: str
    specialist_id: str
    timestamp: float
    kss: int
    window_minutes: int = 5
    is_followup: bool = False
    triggered_by: Optional[str] = None
    linked_break: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.kss, int) or not 1 <= self.kss <= 9:
            raise ValueError("kss must be an integer in 1..9")
        if self.is_followup and self.triggered_by is None:
            raise ValueError("follow-up surveys must reference the triggering record")


@dataclass(frozen=True)
class PfsOutcome:
    action: PfsAction
    tips: Optional[tuple[str, ...]] = None


def submit_pfs(
    specialist_id: str,
    kss: int,
    now: float,
    is_followup: bool = False,
    *,
    triggered_by: Optional[str] = None,
    linked_break: Optional[str] = None,
    record_id: Optional[str] = None,
    kss_threshold: int = KSS_BREAK_THRESHOLD,
    tips: tuple[str, ...] = ALERTNESS_TIPS,
) -> tuple[PfsRecord, PfsOutcome]:
    """File one survey and decide its outcome.

    A first report at or above the threshold suggests a break plus a
    follow-up survey; a follow-up still at or above it triggers
    supervisor outreach with alertness tips.
    """
    if record_id is None:
        suffix = "f" if is_followup else "p"
        record_id = f"pfs-{specialist_id}-{int(now)}-{suffix}"
    record = PfsRecord(
        record_id=record_id,
        specialist_id=specialist_id,
        timestamp=now,
        kss=kss,
        is_followup=is_followup,
        triggered_by=triggered_by,
        linked_break=linked_break,
    )
    if kss < kss_threshold:
        return record, PfsOutcome(action=PfsAction.NONE)
    if is_followup:
        return record, PfsOutcome(action=PfsAction.SUPERVISOR_OUTREACH, tips=tips)
    return record, PfsOutcome(action=PfsAction.SUGGEST_BREAK_AND_FOLLOWUP)


@dataclass(frozen=True)
class TrendSummary:
    """Cohort-level self-report statistics over a time window.

    Series are keyed by shift for comparing routines and schedules; no
    per-specialist performance score is computed.
    """

    shift_series: tuple[tuple[str, tuple[int, ...]], ...]
    mean: Optional[float]
    max: Optional[int]
    crossings_of_6: int
    count: int


def _upward_crossings(series: Sequence[int], threshold: int = 6) -> int:
    crossings = 0
    for prev, cur in zip(series, series[1:]):
        if prev < threshold <= cur:
            crossings += 1
    return crossings


def pfs_trend(
    records: Sequence[PfsRecord], window: tuple[float, float]
) -> TrendSummary:
    """Aggregate surveys falling inside ``window`` (inclusive bounds).

    Records are sorted before aggregation, so the summary is invariant
    under input re-ordering. An empty window yields an empty summary.
    """
    t0, t1 = window
    selected = sorted(
        (r for r in records if t0 <= r.timestamp <= t1),
        key=lambda r: (r.timestamp, r.record_id),
    )
    if not selected:
        return TrendSummary(
            shift_series=(), mean=None, max=None, crossings_of_6=0, count=0
        )
    by_shift: dict[str, list[int]] = {}
    for record in selected:
        day = int(record.timestamp // 86400)
        by_shift.setdefault(f"{record.specialist_id}:day{day}", []).append(record.kss)
    series = tuple(
        (key, tuple(values)) for key, values in sorted(by_shift.items())
    )
    values = [r.kss for r in selected]
    crossings = sum(_upward_crossings(s) for _, s in series)
    return TrendSummary(
        shift_series=series,
        mean=sum(values) / len(values),
        max=max(values),
        crossings_of_6=crossings,
        count=len(values),
    )


def trend_to_csv(summary: TrendSummary) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["shift", "n", "series"])
    for key, series in summary.shift_series:
        writer.writerow([key, len(series), " ".join(str(v) for v in series)])
    writer.writerow([])
    writer.writerow(["mean", "max", "crossings_of_6", "count"])
    writer.writerow(
        [
            "" if summary.mean is None else f"{summary.mean:.4f}",
            "" if summary.max is None else summary.max,
            summary.crossings_of_6,
            summary.count,
        ]
    )
    return out.getvalue()


class ConcernChannel(str, Enum):
    SUPERVISOR_DIRECT = "supervisor_direct"
    ANONYMOUS_SURVEY = "anonymous_survey"
    FIELD_SAFETY_PROGRAM = "field_safety_program"


class ConcernStatus(str, Enum):
    OPEN = "open"
    ASSESSED = "assessed"
    RESOLVED = "resolved"


_STATUS_ORDER = (ConcernStatus.OPEN, ConcernStatus.ASSESSED, ConcernStatus.RESOLVED)


@dataclass(frozen=True)
class ConcernTicket:
    ticket_id: str
    channel: ConcernChannel
    anonymous: bool
    status: ConcernStatus
    summary: str
    specialist_id: Optional[str] = None
    status_history: tuple[ConcernStatus, ...] = (ConcernStatus.OPEN,)

    def to_record(self) -> dict:
        """Serialized form; anonymous tickets carry no identity field."""
        record = {
            "ticket_id": self.ticket_id,
            "channel": self.channel.value,
            "anonymous": self.anonymous,
            "status": self.status.value,
            "summary": self.summary,
            "status_history": [s.value for s in self.status_history],
        }
        if not self.anonymous:
            record["specialist_id"] = self.specialist_id
        return record


def concern_from_record(record: dict) -> ConcernTicket:
    return ConcernTicket(
        ticket_id=record["ticket_id"],
        channel=ConcernChannel(record["channel"]),
        anonymous=record["anonymous"],
        status=ConcernStatus(record["status"]),
        summary=record["summary"],
        specialist_id=record.get("specialist_id"),
        status_history=tuple(ConcernStatus(s) for s in record["status_history"]),
    )


def open_concern(
    channel: ConcernChannel,
    summary: str,
    anonymous: bool,
    *,
    specialist_id: Optional[str] = None,
    ticket_id: str = "ticket-0",
) -> ConcernTicket:
    """Open a safety-concern ticket; anonymous tickets shed identity
    before persistence."""
    if channel is ConcernChannel.ANONYMOUS_SURVEY and not anonymous:
        raise ValueError("the anonymous survey channel only accepts anonymous tickets")
    return ConcernTicket(
        ticket_id=ticket_id,
        channel=channel,
        anonymous=anonymous,
        status=ConcernStatus.OPEN,
        summary=summary,
        specialist_id=None if anonymous else specialist_id,
    )


def advance_concern(ticket: ConcernTicket, new_status: ConcernStatus) -> ConcernTicket:
    """Move a ticket to the next status; the open-assessed-resolved
    order is append-only and cannot be skipped."""
    current_index = _STATUS_ORDER.index(ticket.status)
    new_index = _STATUS_ORDER.index(new_status)
    if new_index != current_index + 1:
        raise ValueError(
            f"cannot move ticket from {ticket.status.value} to {new_status.value}"
        )
    return ConcernTicket(
        ticket_id=ticket.ticket_id,
        channel=ticket.channel,
        anonymous=ticket.anonymous,
        status=new_status,
        summary=ticket.summary,
        specialist_id=ticket.specialist_id,
        status_history=ticket.status_history + (new_status,),
    )


@dataclass(frozen=True)
class DmsVsPfsReport:
    hits: int
    misses: int
    false_alarms: int


def cross_check_dms_vs_pfs(
    dms_flag_times: Sequence[float],
    pfs_records: Sequence[PfsRecord],
    proximity_window_s: float,
    *,
    kss_threshold: int = KSS_BREAK_THRESHOLD,
) -> DmsVsPfsReport:
    """Compare automated flags against subsequent high self-reports.

    A high-KSS survey with a flag in the preceding window is a hit,
    without one a miss; a flag with no high survey in the following
    window is a false alarm.
    """
    flags = sorted(dms_flag_times)
    high = sorted(r.timestamp for r in pfs_records if r.kss >= kss_threshold)
    hits = 0
    misses = 0
    for t in high:
        if any(t - proximity_window_s <= f <= t for f in flags):
            hits += 1
        else:
            misses += 1
    false_alarms = sum(
        1 for f in flags if not any(f <= t <= f + proximity_window_s for t in high)
    )
    return DmsVsPfsReport(hits=hits, misses=misses, false_alarms=false_alarms)
