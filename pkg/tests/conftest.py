from collections import OrderedDict


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", mark.args))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    results = OrderedDict()
    for reports in terminalreporter.stats.values():
        for rep in reports:
            props = dict(getattr(rep, "user_properties", ()) or ())
            if "criterion" not in props or getattr(rep, "when", None) not in ("setup", "call", "teardown"):
                continue
            number, title = props["criterion"]
            ok = not rep.failed and not rep.skipped
            results[number] = (results.get(number, (True, title))[0] and ok, title)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
