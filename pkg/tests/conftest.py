import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _support import ACCEPTANCE  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in checks)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for name, p, detail in checks:
            tr.write_line(f"    [{'ok' if p else 'FAIL'}] {name}: {detail}")
