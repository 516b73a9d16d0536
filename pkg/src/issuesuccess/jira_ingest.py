"""Read-only client for Jira-compatible REST (v2) issue trackers.

Pagination is hidden behind an opaque ``next_cursor`` string: offset-based
servers get ``"offset:<n>"`` cursors, token-based servers ``"token:<t>"``.
Requests are spaced by ``min_request_interval`` milliseconds, retried on
transport errors and 5xx/429 answers, and bounded in number of in-flight
requests, so one client can be shared by several threads.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator
from urllib.parse import quote, urlparse

import requests

from .errors import AuthError, NetworkError, ProtocolError, UnknownIssue, UnknownProject

log = logging.getLogger(__name__)

ISSUE_FIELDS = ("summary", "description", "issuetype", "status", "resolution",
                "created", "resolutiondate", "updated", "project")


@dataclass(frozen=True)
class ItsEndpoint:
    base_url: str
    auth_token: str | None = None
    page_size: int = 50
    max_retries: int = 3
    min_request_interval: float = 0.0  # milliseconds
    timeout: float = 30.0

    def __post_init__(self):
        parsed = urlparse(self.base_url or "")
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"not a URL: {self.base_url!r}")
        if self.page_size < 1:
            raise ValueError("page_size must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.min_request_interval < 0:
            raise ValueError("min_request_interval must be >= 0")

    def url(self, path: str) -> str:
        return f"{self.base_url.rstrip('/')}/{path.lstrip('/')}"


@dataclass
class RawIssuePage:
    items: list[dict]
    next_cursor: str | None = None
    total_reported: int | None = None


class JiraClient:
    """Thread-safe tracker client.

    ``session`` may be any object with a ``requests``-style ``get`` method, which
    is how tests plug in fake servers; ``clock``/``sleep`` are injectable for the
    same reason.
    """

    def __init__(self, endpoint: ItsEndpoint, session=None, max_in_flight: int = 4,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep,
                 backoff: float = 0.5):
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self._pace = threading.Lock()
        self._last_request: float | None = None
        self._clock = clock
        self._sleep = sleep
        self.backoff = backoff
        self.request_times: list[float] = []

    # -- transport -----------------------------------------------------------

    def _headers(self) -> dict:
        headers = {"Accept": "application/json"}
        if self.endpoint.auth_token:
            headers["Authorization"] = f"Bearer {self.endpoint.auth_token}"
        return headers

    def _wait_turn(self):
        interval = self.endpoint.min_request_interval / 1000.0
        with self._pace:
            now = self._clock()
            if self._last_request is not None and interval > 0:
                wait = self._last_request + interval - now
                if wait > 0:
                    self._sleep(wait)
                    now = self._clock()
            self._last_request = now
            self.request_times.append(now)

    def _get(self, path: str, params: dict | None = None, not_found: type[Exception] | None = None,
             not_found_msg: str = "") -> Any:
        url = self.endpoint.url(path)
        attempts = max(1, self.endpoint.max_retries)
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            with self._slots:
                self._wait_turn()
                try:
                    resp = self.session.get(url, params=params, headers=self._headers(),
                                            timeout=self.endpoint.timeout)
                except (requests.ConnectionError, requests.Timeout, OSError) as exc:
                    last_error = exc
                    log.debug("GET %s failed (%s), attempt %d/%d", url, exc, attempt + 1, attempts)
                    continue
            status = resp.status_code
            if status in (401, 403):
                raise AuthError(f"{status} from {url}")
            if status == 404 and not_found is not None:
                raise not_found(not_found_msg or url)
            if status == 429 or status >= 500:
                last_error = NetworkError(f"{status} from {url}")
                continue
            if status == 400 and not_found is not None and _mentions_missing(resp):
                raise not_found(not_found_msg or url)
            if status >= 400:
                raise ProtocolError(f"unexpected status {status} from {url}")
            try:
                return resp.json()
            except ValueError as exc:
                raise ProtocolError(f"unparseable body from {url}: {exc}") from exc
        raise NetworkError(f"GET {url} failed after {attempts} attempt(s): {last_error}")

    # -- operations --------------------------------------------------------------

    def fetch_projects(self) -> list[str]:
        data = self._get("rest/api/2/project")
        if isinstance(data, dict) and "values" in data:  # paginated project search shape
            data = data["values"]
        if not isinstance(data, list):
            raise ProtocolError("project list is not a JSON array")
        keys: list[str] = []
        for item in data:
            if not isinstance(item, dict) or "key" not in item:
                raise ProtocolError("project entry without key")
            if item["key"] not in keys:
                keys.append(item["key"])
        return keys

    def fetch_issues(self, project_key: str, cursor: str | None = None) -> RawIssuePage:
        if not project_key:
            raise ValueError("project_key must be non-empty")
        params = {
            "jql": f'project = "{project_key}" ORDER BY key ASC',
            "maxResults": self.endpoint.page_size,
            "fields": ",".join(ISSUE_FIELDS),
        }
        start = 0
        if cursor:
            kind, _, value = cursor.partition(":")
            if kind == "offset":
                start = int(value)
            elif kind == "token":
                params["nextPageToken"] = value
            else:
                raise ValueError(f"malformed cursor {cursor!r}")
        if "nextPageToken" not in params:
            params["startAt"] = start
        data = self._get("rest/api/2/search", params, UnknownProject, project_key)
        if not isinstance(data, dict) or not isinstance(data.get("issues"), list):
            raise ProtocolError("search response without an issues array")
        items = data["issues"]
        total = data.get("total")
        if total is not None and (not isinstance(total, int) or total < 0):
            raise ProtocolError(f"bad total {total!r}")
        next_cursor = None
        if data.get("nextPageToken"):
            next_cursor = f"token:{data['nextPageToken']}"
        elif "nextPageToken" in params or data.get("isLast") is True or not items:
            pass  # a token-paginated listing without a new token is finished
        elif "startAt" in data:
            got = data["startAt"] + len(items)
            # without a total, only a full page hints at more data
            more = got < total if total is not None else len(items) >= self.endpoint.page_size
            if more:
                next_cursor = f"offset:{got}"
        return RawIssuePage(items, next_cursor, total)

    def iter_issues(self, project_key: str) -> Iterator[dict]:
        cursor = None
        seen: set[str] = set()
        while True:
            page = self.fetch_issues(project_key, cursor)
            yield from page.items
            if page.next_cursor is None:
                return
            if page.next_cursor in seen:
                raise ProtocolError(f"server repeated cursor {page.next_cursor!r}")
            seen.add(page.next_cursor)
            cursor = page.next_cursor

    def fetch_comments(self, issue_id: str) -> list[dict]:
        if not issue_id:
            raise ValueError("issue_id must be non-empty")
        path = f"rest/api/2/issue/{quote(str(issue_id), safe='')}/comment"
        comments: list[dict] = []
        start = 0
        while True:
            data = self._get(path, {"startAt": start, "maxResults": self.endpoint.page_size},
                             UnknownIssue, issue_id)
            if not isinstance(data, dict) or not isinstance(data.get("comments"), list):
                raise ProtocolError("comment response without a comments array")
            batch = data["comments"]
            comments.extend(batch)
            total = data.get("total")
            start = data.get("startAt", start) + len(batch)
            if not batch or total is None or start >= total:
                return comments


def _mentions_missing(resp) -> bool:
    try:
        body = resp.json()
    except ValueError:
        return False
    messages = body.get("errorMessages", []) if isinstance(body, dict) else []
    text = " ".join(map(str, messages)).lower()
    return "does not exist" in text or "not found" in text


# --- raw dump -----------------------------------------------------------------

def _line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n"


def ingest_project(client: JiraClient, project_key: str, with_comments: bool = True) -> list[dict]:
    """Raw records for one project: the project, its issues, then each issue's comments."""
    records = [{"kind": "project", "key": project_key}]
    for issue in client.iter_issues(project_key):
        key = issue.get("key") or issue.get("id")
        records.append({"kind": "issue", "project": project_key, "payload": issue})
        if with_comments:
            for comment in client.fetch_comments(str(key)):
                records.append({"kind": "comment", "issue_id": str(key), "payload": comment})
    return records


def dump_raw(client: JiraClient, project_keys: Iterable[str], path, workers: int = 1,
             with_comments: bool = True) -> int:
    """Fetch projects (concurrently across projects) and write newline-delimited JSON.

    Output order follows ``project_keys`` regardless of completion order.
    Returns the number of records written.
    """
    keys = list(project_keys)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda k: ingest_project(client, k, with_comments), keys))
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for records in results:
            for rec in records:
                fh.write(_line(rec))
                n += 1
    return n


def read_raw(path) -> Iterator[dict]:
    from .corpus import iter_jsonl

    for lineno, obj in iter_jsonl(path):
        if obj.get("kind") not in ("issue", "comment", "project"):
            from .errors import SchemaError
            raise SchemaError(f"unknown raw record kind {obj.get('kind')!r}", lineno)
        yield obj
