"""Shared fixtures and the acceptance-criterion verdict report.

Acceptance tests record one verdict line per criterion through the
``acceptance`` fixture; after the run the lines are printed in a dedicated
terminal section and mirrored to acceptance_report.txt at the repo root.
Criteria asserted verbatim but known to be unattainable still record their
measured FAIL line before the (strictly expected) assertion failure fires.
"""

from __future__ import annotations

from pathlib import Path

import pytest

_VERDICTS: dict[str, tuple[bool, str]] = {}


def record_acceptance(tag: str, passed: bool, detail: str) -> None:
    _VERDICTS[tag] = (bool(passed), detail)


@pytest.fixture
def acceptance():
    """Callable (tag, passed, detail) -> None recording one criterion verdict."""
    return record_acceptance


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    lines = []
    for tag in sorted(_VERDICTS):
        passed, detail = _VERDICTS[tag]
        lines.append(f"{tag}: {'PASS' if passed else 'FAIL'} - {detail}")
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    Path(config.rootpath, "acceptance_report.txt").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )
