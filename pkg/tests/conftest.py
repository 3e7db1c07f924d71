def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance suite's one-line-per-criterion results, which are
    otherwise swallowed by output capture when a criterion passes."""
    try:
        from acceptance_log import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
