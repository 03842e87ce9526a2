"""Collects per-criterion outcomes so one PASS/FAIL line per criterion can be printed."""
from collections import OrderedDict

RESULTS: "OrderedDict[int, list]" = OrderedDict()


def record(criterion: int, part: str, ok: bool, detail: str) -> bool:
    RESULTS.setdefault(criterion, []).append((part, bool(ok), detail))
    return ok


def lines() -> list[str]:
    out = []
    for c in sorted(RESULTS):
        parts = RESULTS[c]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        body = "; ".join(f"{p}: {'ok' if ok else 'FAIL'} ({d})" for p, ok, d in parts)
        out.append(f"criterion {c}: {verdict} | {body}")
    return out
