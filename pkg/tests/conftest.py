from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import pytest

from restcov.spec_model import load_spec
from restcov.traffic_log import Interaction

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_RESULTS: list[tuple[str, bool, float, str]] = []


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def petstore():
    with open(FIXTURES / "petstore.yaml", "rb") as fh:
        return load_spec(fh)


def ix(method: str, url: str, status: int = 200, req=(), resp=(), body=None, resp_body=None) -> Interaction:
    return Interaction(
        timestamp=datetime(2021, 3, 1, tzinfo=timezone.utc),
        method=method,
        url=url,
        status=status,
        request_headers=tuple(req),
        request_body=body,
        response_headers=tuple(resp),
        response_body=resp_body,
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, elapsed, detail in ACCEPTANCE_RESULTS:
        line = f"[{'PASS' if ok else 'FAIL'}] {name} ({elapsed:.2f}s)"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)
