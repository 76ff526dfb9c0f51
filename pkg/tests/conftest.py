import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def _criterion_key(line):
    m = re.match(r"\w+ C(\d+)(\w*)", line)
    return (int(m.group(1)), m.group(2)) if m else (0, line)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_key):
            terminalreporter.write_line(line)
