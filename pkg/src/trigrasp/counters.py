"""Process-wide warning counters.

Lossy-but-allowed events (width clamps, dropped regions, skipped Cornell
groups, ...) are counted here instead of raising.  Counters are plain
module state: cheap, inspectable from tests and echoed by the CLI.
"""

from collections import Counter

_counts: Counter = Counter()


def bump(name: str, n: int = 1) -> None:
    _counts[name] += n


def count(name: str) -> int:
    return _counts[name]


def snapshot() -> dict:
    return dict(_counts)


def reset() -> None:
    _counts.clear()
