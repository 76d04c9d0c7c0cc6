"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

LINES = []


def report(number, title, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
    if detail:
        line += f"  ({detail})"
    LINES.append(line)
    print(line)
    return ok
