"""Hard-constraint violation counters.

Solvers re-verify their own results before returning (budget respected,
risk ceiling respected). A violation increments a counter here and raises;
test suites assert the counters stay at zero across entire runs.
"""

from __future__ import annotations

counters = {
    "budget_violations": 0,
    "ceiling_violations": 0,
}


def reset() -> None:
    for key in counters:
        counters[key] = 0


def snapshot() -> dict[str, int]:
    return dict(counters)
