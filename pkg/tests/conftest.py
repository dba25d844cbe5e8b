import re


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with its measured details."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", rep.nodeid)
            if not m or rep.when not in ("call", "setup"):
                continue
            if rep.when == "setup" and rep.passed:
                continue
            details = "; ".join(f"{k}={v}" for k, v in rep.user_properties)
            status = "PASS" if rep.passed else "FAIL"
            lines[int(m.group(1))] = (f"criterion {m.group(1)} ({m.group(2).replace('_', ' ')}): "
                                      f"{status}" + (f"  [{details}]" if details else ""))
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
