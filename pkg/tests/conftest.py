import hypothesis

hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=60, derandomize=True)
hypothesis.settings.load_profile("suite")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    verdicts = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            word = "PASS" if outcome == "passed" else "FAIL"
            if verdicts.get(name) != "FAIL":
                verdicts[name] = word
    if verdicts:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(verdicts):
            terminalreporter.write_line(f"{verdicts[name]}  {name}")
