import os
import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num][1])
    passed = sum(ok for ok, _ in results.values())
    terminalreporter.write_line(f"{passed}/{len(results)} criteria pass"
                                f" (kernels: {os.environ.get('HALFROBIN_DISABLE_NUMBA') and 'numpy' or 'numba'})")
