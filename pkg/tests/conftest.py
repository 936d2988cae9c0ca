import os

from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" in nodeid and rep.when == "call":
                name = nodeid.split("::")[-1][len("test_criterion_"):]
                lines.append((name, "PASS" if outcome == "passed" else "FAIL", rep.duration))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict, dur in sorted(lines):
            terminalreporter.write_line(f"criterion {name}: {verdict} ({dur:.1f} s)")
