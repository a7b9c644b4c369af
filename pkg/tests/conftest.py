import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (title, [(part, passed, details, seconds)])
ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): part of a numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    details = ", ".join(f"{k}={v}" for k, v in item.user_properties)
    _, parts = ACCEPTANCE.setdefault(number, (title, []))
    parts.append((item.name, rep.passed, details, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, parts = ACCEPTANCE[number]
        ok = all(p[1] for p in parts)
        seconds = sum(p[3] for p in parts)
        failed = [p[0] for p in parts if not p[1]]
        info = "; ".join(p[2] for p in parts if p[2])
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({seconds:.1f}s)"
        if failed:
            line += f" failed parts: {', '.join(failed)}"
        if info:
            line += f" | {info}"
        terminalreporter.write_line(line)
