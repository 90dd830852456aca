"""Offline guard plus a terminal summary block for the acceptance checks."""

from __future__ import annotations

import pathlib
import socket

import pytest

_acceptance_lines: list[str] = []
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
    terminalreporter.section("service acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)
