"""Typed issue/comment records, success labeling and corpus persistence.

Raw tracker payloads (see :mod:`issuesuccess.jira_ingest`) are normalised into
:class:`IssueRecord` / :class:`CommentRecord` values.  Only closed issues of the
three studied types with a recognised resolution tag enter the labeled corpus;
everything else is written to an exclusion report.
"""
from __future__ import annotations

import csv
import enum
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidInterval, SchemaError, UnknownResolution

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
CORPUS_FORMAT = "issuesuccess-corpus"
CORPUS_VERSION = 1


class IssueType(str, enum.Enum):
    BUG = "Bug"
    IMPROVEMENT = "Improvement"
    NEW_FEATURE = "NewFeature"

    @classmethod
    def parse(cls, name: str) -> "IssueType":
        """Accept tracker spellings such as ``"New Feature"`` or ``"new_feature"``."""
        key = re.sub(r"[\s_-]+", "", name).lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unsupported issue type: {name!r}")


class SuccessLabel(str, enum.Enum):
    SUCCESSFUL = "Successful"
    UNSUCCESSFUL = "Unsuccessful"


def _normalize_tag(tag: str) -> str:
    tag = tag.replace("’", "'").replace("`", "'").lower()
    tag = tag.replace("'", "")
    return " ".join(tag.split())


SUCCESS_TAGS = frozenset(map(_normalize_tag, ["Complete", "Done", "Fixed", "Resolved"]))
FAILURE_TAGS = frozenset(map(_normalize_tag, [
    "Abandoned", "Cannot Reproduce", "Incomplete", "Timed out",
    "Unresolved", "Won't Do", "Won't Fix",
]))


def map_resolution(resolution_tag: str) -> SuccessLabel:
    """Label an issue from its resolution tag.

    Matching ignores case, apostrophes and runs of whitespace, so ``"Won't Fix"``,
    ``"wont fix"`` and ``"WON’T  FIX"`` are the same tag.
    """
    if not resolution_tag or not resolution_tag.strip():
        raise UnknownResolution("empty resolution tag")
    key = _normalize_tag(resolution_tag)
    if key in SUCCESS_TAGS:
        return SuccessLabel.SUCCESSFUL
    if key in FAILURE_TAGS:
        return SuccessLabel.UNSUCCESSFUL
    raise UnknownResolution(resolution_tag)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp with offset and return it in UTC.

    Handles Jira's ``2019-08-01T12:34:56.000+0000`` form as well as ``Z`` and
    ``+00:00`` suffixes.  Naive timestamps are rejected.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    m = re.fullmatch(r"(.*[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?)([+-]\d{2}):?(\d{2})", text)
    if not m:
        raise ValueError(f"timestamp without UTC offset: {value!r}")
    base, hh, mm = m.groups()
    frac = re.search(r"\.(\d+)$", base)
    if frac and len(frac.group(1)) != 6:
        base = base[: frac.start()] + "." + frac.group(1)[:6].ljust(6, "0")
    dt = datetime.fromisoformat(f"{base}{hh}:{mm}")
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class IssueRecord:
    issue_id: str
    project_key: str
    issue_type: IssueType
    created_at: datetime
    resolved_at: datetime
    status: str
    resolution_tag: str
    description: str
    label: SuccessLabel


@dataclass(frozen=True)
class CommentRecord:
    comment_id: str
    issue_id: str
    created_at: datetime
    description: str


@dataclass
class DataQualityReport:
    """Counters for tolerated data defects."""

    clamped_offsets: int = 0


@dataclass
class Exclusion:
    issue_id: str
    resolution_tag: str
    reason: str


def _elapsed_days(start: datetime, end: datetime) -> int:
    # integer arithmetic on timedelta avoids float rounding at day boundaries
    delta = end - start
    return (delta.days * SECONDS_PER_DAY + delta.seconds) // SECONDS_PER_DAY


def resolution_days(issue: IssueRecord) -> int:
    if issue.resolved_at < issue.created_at:
        raise InvalidInterval(
            f"{issue.issue_id}: resolved {issue.resolved_at} before created {issue.created_at}")
    return _elapsed_days(issue.created_at, issue.resolved_at)


def comment_offset_days(issue: IssueRecord, comment: CommentRecord,
                        report: DataQualityReport | None = None) -> int:
    """Whole days from issue creation to the comment; clock-skewed negatives become 0."""
    if comment.issue_id != issue.issue_id:
        raise ValueError(f"comment {comment.comment_id} belongs to {comment.issue_id}, not {issue.issue_id}")
    days = _elapsed_days(issue.created_at, comment.created_at)
    if days < 0:
        if report is not None:
            report.clamped_offsets += 1
        return 0
    return days


@dataclass(frozen=True)
class Corpus:
    """Immutable collection of labeled issues and their comments."""

    issues: tuple[IssueRecord, ...] = ()
    comments: tuple[CommentRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "issues", tuple(self.issues))
        object.__setattr__(self, "comments", tuple(self.comments))

    @cached_property
    def comments_by_issue(self) -> dict[str, tuple[CommentRecord, ...]]:
        """Comments per issue, ordered by timestamp then id."""
        grouped = defaultdict(list)
        for c in self.comments:
            grouped[c.issue_id].append(c)
        return {k: tuple(sorted(v, key=lambda c: (c.created_at, c.comment_id)))
                for k, v in grouped.items()}

    def __len__(self):
        return len(self.issues)

    def projects(self) -> list[str]:
        return sorted({i.project_key for i in self.issues})

    def subset(self, issue_ids: Iterable[str]) -> "Corpus":
        keep = set(issue_ids)
        return Corpus(
            tuple(i for i in self.issues if i.issue_id in keep),
            tuple(c for c in self.comments if c.issue_id in keep),
        )


# --- normalisation of raw tracker payloads ----------------------------------

def _field(payload: dict, *path, default=None):
    cur = payload
    for key in path:
        if not isinstance(cur, dict) or key not in cur or cur[key] is None:
            return default
        cur = cur[key]
    return cur


_ADF_BLOCK_CONTAINERS = frozenset({"doc", "blockquote", "bulletList", "orderedList", "listItem",
                                   "panel", "table", "tableRow", "tableCell", "tableHeader"})


def _text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    # Atlassian document format (REST v3) stores rich text as a node tree
    if isinstance(value, dict):
        kind = value.get("type")
        if kind == "text":
            return value.get("text", "")
        if kind == "hardBreak":
            return "\n"
        parts = [_text(child) for child in value.get("content", []) or []]
        # block containers hold one block per line; inline runs concatenate
        sep = "\n" if kind in _ADF_BLOCK_CONTAINERS else ""
        return sep.join(p for p in parts if p)
    return str(value)


def normalize_issue(payload: dict, project_key: str | None = None) -> IssueRecord:
    """Turn one Jira issue payload into an :class:`IssueRecord`.

    Raises ``ValueError`` subclasses describing why the issue cannot be labeled.
    """
    issue_id = payload.get("key") or payload.get("id")
    if not issue_id:
        raise SchemaError("issue payload without key")
    fields = payload.get("fields") or {}
    project = project_key or _field(fields, "project", "key") or str(issue_id).rsplit("-", 1)[0]
    issue_type = IssueType.parse(_field(fields, "issuetype", "name", default=""))
    status = _field(fields, "status", "name", default="")
    tag = _field(fields, "resolution", "name", default="") or ""
    label = map_resolution(tag)
    created = fields.get("created")
    resolved = fields.get("resolutiondate")
    if not created or not resolved:
        raise SchemaError(f"{issue_id}: missing created/resolutiondate")
    return IssueRecord(
        issue_id=str(issue_id),
        project_key=str(project),
        issue_type=issue_type,
        created_at=parse_timestamp(created),
        resolved_at=parse_timestamp(resolved),
        status=str(status),
        resolution_tag=tag,
        description=_text(fields.get("description")),
        label=label,
    )


def normalize_comment(payload: dict, issue_id: str) -> CommentRecord:
    if "id" not in payload or "created" not in payload:
        raise SchemaError(f"comment payload of {issue_id} without id/created")
    return CommentRecord(
        comment_id=str(payload["id"]),
        issue_id=issue_id,
        created_at=parse_timestamp(payload["created"]),
        description=_text(payload.get("body")),
    )


def build_corpus(raw_records: Iterable[dict]) -> tuple[Corpus, list[Exclusion]]:
    """Normalise a raw dump into a labeled corpus plus an exclusion list.

    Issues are excluded when their status is not ``Closed``, their type is not
    one of the three studied types, their resolution tag is unknown or their
    timestamps are inconsistent.  Comments of excluded issues are dropped.
    When an issue appears more than once (re-fetched after a re-open), the last
    payload wins, so its final resolution date is used.
    """
    issue_payloads: dict[str, tuple[dict, str | None]] = {}
    comment_payloads: dict[str, dict[str, dict]] = defaultdict(dict)
    for rec in raw_records:
        kind = rec.get("kind")
        if kind == "issue":
            payload = rec["payload"]
            key = str(payload.get("key") or payload.get("id"))
            issue_payloads[key] = (payload, rec.get("project"))
        elif kind == "comment":
            payload = rec["payload"]
            comment_payloads[str(rec["issue_id"])][str(payload.get("id"))] = payload

    issues, comments, excluded = [], [], []
    for key, (payload, project) in issue_payloads.items():
        tag = _field(payload, "fields", "resolution", "name", default="") or ""
        try:
            issue = normalize_issue(payload, project)
        except UnknownResolution:
            excluded.append(Exclusion(key, tag, "unknown_resolution"))
            continue
        except (SchemaError, ValueError) as exc:
            excluded.append(Exclusion(key, tag, f"malformed: {exc}"))
            continue
        if issue.status.lower() != "closed":
            excluded.append(Exclusion(key, tag, "status_not_closed"))
            continue
        if issue.resolved_at < issue.created_at:
            excluded.append(Exclusion(key, tag, "invalid_interval"))
            continue
        issues.append(issue)
        for cpayload in comment_payloads.get(key, {}).values():
            try:
                comments.append(normalize_comment(cpayload, issue.issue_id))
            except (SchemaError, ValueError) as exc:
                log.warning("dropping comment of %s: %s", key, exc)
    issues.sort(key=lambda i: i.issue_id)
    comments.sort(key=lambda c: (c.issue_id, c.created_at, c.comment_id))
    return Corpus(tuple(issues), tuple(comments)), excluded


def write_exclusions(path, exclusions: Iterable[Exclusion]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["issue_id", "resolution_tag", "reason"])
        for e in exclusions:
            writer.writerow([e.issue_id, e.resolution_tag, e.reason])


# --- sampling & statistics -------------------------------------------------

def sample_study_set(corpus: Corpus, per_type_per_class: int, seed: int) -> Corpus:
    """Draw a balanced study set: ``per_type_per_class`` issues per (type, label) cell.

    Cells holding fewer issues are taken whole and reported through the log.
    Selection is a seeded uniform draw without replacement; the subset keeps all
    comments of the selected issues and the original issue order.
    """
    if per_type_per_class < 1:
        raise ValueError("per_type_per_class must be positive")
    rng = np.random.default_rng(seed)
    cells: dict[tuple, list[str]] = {(t, l): [] for t in IssueType for l in SuccessLabel}
    for issue in corpus.issues:
        cells[(issue.issue_type, issue.label)].append(issue.issue_id)
    chosen: set[str] = set()
    for (itype, label), ids in cells.items():
        ids = sorted(ids)
        if len(ids) <= per_type_per_class:
            if len(ids) < per_type_per_class:
                log.warning("cell (%s, %s) has %d issues < %d requested; taking all",
                            itype.value, label.value, len(ids), per_type_per_class)
            chosen.update(ids)
        else:
            picked = rng.choice(len(ids), size=per_type_per_class, replace=False)
            chosen.update(ids[i] for i in picked)
    return corpus.subset(chosen)


def deficient_cells(corpus: Corpus, per_type_per_class: int) -> dict[tuple[IssueType, SuccessLabel], int]:
    """Cells that cannot supply ``per_type_per_class`` issues, with their sizes."""
    counts = corpus_stats(corpus).issues
    return {cell: n for cell, n in counts.items() if n < per_type_per_class}


@dataclass
class CorpusStats:
    issues: dict[tuple[IssueType, SuccessLabel], int] = field(default_factory=dict)
    comments: dict[tuple[IssueType, SuccessLabel], int] = field(default_factory=dict)

    @property
    def total_issues(self) -> int:
        return sum(self.issues.values())

    @property
    def total_comments(self) -> int:
        return sum(self.comments.values())


def corpus_stats(corpus: Corpus) -> CorpusStats:
    cells = [(t, l) for t in IssueType for l in SuccessLabel]
    issues = Counter({c: 0 for c in cells})
    comments = Counter({c: 0 for c in cells})
    by_issue = corpus.comments_by_issue
    for issue in corpus.issues:
        cell = (issue.issue_type, issue.label)
        issues[cell] += 1
        comments[cell] += len(by_issue.get(issue.issue_id, ()))
    return CorpusStats(dict(issues), dict(comments))


# --- persistence ----------------------------------------------------------

_ISSUE_FIELDS = ("issue_id", "project_key", "issue_type", "created_at", "resolved_at",
                 "status", "resolution_tag", "description", "label")
_COMMENT_FIELDS = ("comment_id", "issue_id", "created_at", "description")


def _issue_to_json(i: IssueRecord) -> dict:
    return {
        "kind": "issue",
        "issue_id": i.issue_id,
        "project_key": i.project_key,
        "issue_type": i.issue_type.value,
        "created_at": format_timestamp(i.created_at),
        "resolved_at": format_timestamp(i.resolved_at),
        "status": i.status,
        "resolution_tag": i.resolution_tag,
        "description": i.description,
        "label": i.label.value,
    }


def _comment_to_json(c: CommentRecord) -> dict:
    return {
        "kind": "comment",
        "comment_id": c.comment_id,
        "issue_id": c.issue_id,
        "created_at": format_timestamp(c.created_at),
        "description": c.description,
    }


def write_corpus(path, corpus: Corpus) -> None:
    """Write ``corpus.jsonl``: a header line, then one JSON object per record."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"kind": "header", "format": CORPUS_FORMAT, "version": CORPUS_VERSION}
        fh.write(json.dumps(header) + "\n")
        for issue in corpus.issues:
            fh.write(json.dumps(_issue_to_json(issue), ensure_ascii=False) + "\n")
        for comment in corpus.comments:
            fh.write(json.dumps(_comment_to_json(comment), ensure_ascii=False) + "\n")


def _parse_issue(obj: dict, lineno: int) -> IssueRecord:
    missing = [f for f in _ISSUE_FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"issue record missing fields {missing}", lineno)
    try:
        issue = IssueRecord(
            issue_id=str(obj["issue_id"]),
            project_key=str(obj["project_key"]),
            issue_type=IssueType(obj["issue_type"]),
            created_at=parse_timestamp(obj["created_at"]),
            resolved_at=parse_timestamp(obj["resolved_at"]),
            status=str(obj["status"]),
            resolution_tag=str(obj["resolution_tag"]),
            description=str(obj["description"]),
            label=SuccessLabel(obj["label"]),
        )
    except (ValueError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad issue record: {exc}", lineno) from exc
    try:
        consistent = map_resolution(issue.resolution_tag) == issue.label
    except UnknownResolution:
        consistent = False
    if not consistent:
        raise SchemaError(f"label {issue.label.value} inconsistent with tag {issue.resolution_tag!r}", lineno)
    return issue


def _parse_comment(obj: dict, lineno: int) -> CommentRecord:
    missing = [f for f in _COMMENT_FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"comment record missing fields {missing}", lineno)
    try:
        return CommentRecord(
            comment_id=str(obj["comment_id"]),
            issue_id=str(obj["issue_id"]),
            created_at=parse_timestamp(obj["created_at"]),
            description=str(obj["description"]),
        )
    except (ValueError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad comment record: {exc}", lineno) from exc


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON ({exc.msg})", lineno) from exc
            if not isinstance(obj, dict):
                raise SchemaError("record is not a JSON object", lineno)
            yield lineno, obj


def read_corpus(path) -> Corpus:
    issues, comments = [], []
    seen_header = False
    for lineno, obj in iter_jsonl(Path(path)):
        kind = obj.get("kind")
        if kind == "header":
            if obj.get("format") != CORPUS_FORMAT:
                raise SchemaError(f"unknown corpus format {obj.get('format')!r}", lineno)
            seen_header = True
        elif kind == "issue":
            issues.append(_parse_issue(obj, lineno))
        elif kind == "comment":
            comments.append(_parse_comment(obj, lineno))
        else:
            raise SchemaError(f"unknown record kind {kind!r}", lineno)
    if not seen_header:
        raise SchemaError("missing header line", 1)
    known = {i.issue_id for i in issues}
    for c in comments:
        if c.issue_id not in known:
            raise SchemaError(f"comment {c.comment_id} references unknown issue {c.issue_id}")
    return Corpus(tuple(issues), tuple(comments))
