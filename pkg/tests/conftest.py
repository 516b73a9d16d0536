import json
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path
from urllib.parse import urlparse

import numpy as np
import pytest

from issuesuccess.corpus import CommentRecord, Corpus, IssueRecord, IssueType, map_resolution

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)

SUCCESS_WORDS = "patch commit merged applied trunk revision tests attached".split()
FAILURE_WORDS = "duplicate invalid obsolete stale unclear rejected wontfix closing".split()


def make_issue(issue_id, *, itype=IssueType.BUG, tag="Fixed", days=50.0, description="",
               project="P", created=T0):
    return IssueRecord(issue_id, project, itype, created, created + timedelta(days=days), "Closed",
                       tag, description, map_resolution(tag))


def make_comment(comment_id, issue, *, days=1.0, text=""):
    return CommentRecord(comment_id, issue.issue_id, issue.created_at + timedelta(days=days), text)


def separable_corpus(n=40, seed=0, itype=IssueType.BUG, days=50.0, project="P"):
    """Corpus whose two classes draw words from disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    issues, comments = [], []
    for i in range(n):
        ok = i % 2 == 0
        words = SUCCESS_WORDS if ok else FAILURE_WORDS
        issue = make_issue(f"{project}-{i}", itype=itype, tag="Fixed" if ok else "Won't Fix",
                           days=days, description=" ".join(rng.choice(words, 12)), project=project)
        issues.append(issue)
        comments.append(make_comment(f"{project}-c{i}", issue, text=" ".join(rng.choice(words, 6))))
    return Corpus(tuple(issues), tuple(comments))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance.VERDICTS):
            terminalreporter.write_line(line)


@pytest.fixture
def sep_corpus():
    return separable_corpus()


# --- fake Jira server -------------------------------------------------------------

class FakeResponse:
    def __init__(self, status_code, body):
        self.status_code = status_code
        self._body = body

    def json(self):
        if isinstance(self._body, (bytes, str)):
            return json.loads(self._body)
        return self._body


class FakeJira:
    """In-memory Jira REST v2 stand-in usable as a ``requests`` session.

    ``mode`` selects offset (startAt/total) or token (nextPageToken) pagination.
    ``failures`` maps a path substring to a number of leading 503 answers.
    """

    def __init__(self, projects=None, comments=None, mode="offset", failures=None,
                 server_page_cap=None):
        self.projects = projects or {}
        self.comments = comments or {}
        self.mode = mode
        self.failures = dict(failures or {})
        self.server_page_cap = server_page_cap
        self.calls = []
        self.overrides = {}

    def get(self, url, params=None, headers=None, timeout=None):
        params = dict(params or {})
        path = urlparse(url).path
        self.calls.append((path, params, headers))
        for key, body in self.overrides.items():
            if key in path:
                return body if isinstance(body, FakeResponse) else FakeResponse(200, body)
        for key in list(self.failures):
            if key in path and self.failures[key] > 0:
                self.failures[key] -= 1
                return FakeResponse(503, {"errorMessages": ["unavailable"]})
        if path.endswith("/rest/api/2/project"):
            return FakeResponse(200, [{"key": k, "name": k.lower()} for k in self.projects])
        if path.endswith("/rest/api/2/search"):
            key = params["jql"].split('"')[1]
            if key not in self.projects:
                return FakeResponse(400, {"errorMessages": [f"The value '{key}' does not exist for the field 'project'."]})
            issues = self.projects[key]
            size = int(params["maxResults"])
            if self.server_page_cap:
                size = min(size, self.server_page_cap)
            if self.mode == "token":
                start = int(params.get("nextPageToken", "0") or 0)
                page = issues[start:start + size]
                body = {"issues": page}
                if start + size < len(issues):
                    body["nextPageToken"] = str(start + size)
                return FakeResponse(200, body)
            start = int(params.get("startAt", 0))
            page = issues[start:start + size]
            return FakeResponse(200, {"startAt": start, "maxResults": size, "total": len(issues),
                                      "issues": page})
        if "/rest/api/2/issue/" in path and path.endswith("/comment"):
            issue_id = path.split("/")[-2]
            if issue_id not in self.comments:
                return FakeResponse(404, {"errorMessages": ["Issue does not exist"]})
            items = self.comments[issue_id]
            start = int(params.get("startAt", 0))
            size = int(params.get("maxResults", 50))
            return FakeResponse(200, {"startAt": start, "maxResults": size, "total": len(items),
                                      "comments": items[start:start + size]})
        return FakeResponse(404, {"errorMessages": ["no such resource"]})


def raw_issue(key, *, itype="Bug", status="Closed", resolution="Fixed", created="2020-01-01T00:00:00.000+0000",
              resolved="2020-02-01T00:00:00.000+0000", description="text"):
    return {"id": key.replace("-", "0"), "key": key, "fields": {
        "issuetype": {"name": itype}, "status": {"name": status},
        "resolution": {"name": resolution} if resolution else None,
        "created": created, "resolutiondate": resolved, "description": description}}


def raw_comment(cid, body="ok", created="2020-01-02T00:00:00.000+0000"):
    return {"id": str(cid), "body": body, "created": created, "author": {"name": "x"}}
