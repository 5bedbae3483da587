from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import corpus  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if corpus.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(corpus.ACCEPTANCE):
            terminalreporter.write_line(corpus.ACCEPTANCE[n])
