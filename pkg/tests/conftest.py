def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((rep.nodeid, "PASS" if outcome == "passed" else "FAIL", props))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, verdict, props in sorted(lines):
        detail = props.get("detail", "")
        terminalreporter.write_line(f"{verdict}  {props['criterion']}" + (f"  [{detail}]" if detail else ""))
