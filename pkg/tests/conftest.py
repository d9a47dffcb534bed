import os

# keep CLI runs from tests out of the working tree
os.environ.setdefault("ENSEMBLELAB_OUTPUT_ROOT", os.path.join(os.environ.get("TMPDIR", "/tmp"), "ensemblelab-test-runs"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(':'))):
            terminalreporter.write_line(line)
