"""Collects one verdict line per acceptance criterion for the terminal summary."""

import contextlib

LINES = {}


@contextlib.contextmanager
def criterion(number, title):
    try:
        yield
    except BaseException as exc:
        LINES[number] = f"FAIL [{number:2d}] {title}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}"
        raise
    LINES[number] = f"PASS [{number:2d}] {title}"
