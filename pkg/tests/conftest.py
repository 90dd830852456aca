"""Shared test scaffolding.

Two suite-wide behaviors live here:

* the whole suite runs offline: any attempt to open a TCP connection fails
  with OSError, so code paths that fall back on connection errors still see
  the exception type they would see against a dead endpoint;
* acceptance checks (tests/test_acceptance.py) get a one-line pass/fail
  summary block at the end of the run.
"""

from __future__ import annotations

import pathlib
import socket
import time

import pytest

_acceptance_lines: list[str] = []
_suite_start = time.perf_counter()
_ACCEPTANCE_FILE = pathlib.Path(__file__).resolve().parent / "test_acceptance.py"
_rootpath: pathlib.Path | None = None


def pytest_configure(config):
    global _rootpath
    _rootpath = config.rootpath


@pytest.fixture(autouse=True, scope="session")
def no_network():
    real_connect = socket.socket.connect
    real_connect_ex = socket.socket.connect_ex

    def refuse(self, address, *args, **kwargs):
        raise OSError(f"test suite is offline; refused connection to {address!r}")

    socket.socket.connect = refuse
    socket.socket.connect_ex = refuse
    try:
        yield
    finally:
        socket.socket.connect = real_connect
        socket.socket.connect_ex = real_connect_ex


def pytest_runtest_logreport(report):
    if report.when != "call" or _rootpath is None:
        return
    # resolve against rootpath so a combined run spanning several test trees
    # only picks up this tree's acceptance file
    if (_rootpath / report.location[0]).resolve() != _ACCEPTANCE_FILE:
        return
    name = report.nodeid.split("::", 1)[1]
    if report.passed:
        _acceptance_lines.append(f"[ACCEPTANCE] pass: {name} ({report.duration:.2f}s)")
    elif report.failed:
        _acceptance_lines.append(f"[ACCEPTANCE] FAIL: {name}")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)
    elapsed = time.perf_counter() - _suite_start
    verdict = "pass" if elapsed < 60.0 else "FAIL"
    terminalreporter.write_line(
        f"[ACCEPTANCE] {verdict}: suite wall time {elapsed:.1f}s (budget 60s)"
    )
