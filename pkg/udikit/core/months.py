"""
Calendar month keys for monthly composites
"""

import re
from dataclasses import dataclass

MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


@dataclass(frozen=True, order=True)
class MonthKey:
    """A (year, month) pair, totally ordered"""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            msg = f"Invalid month: {self.month}"
            raise ValueError(msg)

    @classmethod
    def parse(cls, text: "str | MonthKey") -> "MonthKey":
        """Parse 'YYYY-MM'"""
        if isinstance(text, MonthKey):
            return text
        match = _MONTH_RE.match(str(text))
        if not match:
            msg = f"Invalid month key {text!r}, expected YYYY-MM"
            raise ValueError(msg)
        return cls(int(match.group(1)), int(match.group(2)))

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "MonthKey":
        year, month0 = divmod(ordinal, 12)
        return cls(year, month0 + 1)

    @property
    def ordinal(self) -> int:
        """Months since year 0"""
        return self.year * 12 + self.month - 1

    @property
    def name(self) -> str:
        return MONTH_NAMES[self.month - 1]

    def shift(self, months: int) -> "MonthKey":
        return MonthKey.from_ordinal(self.ordinal + months)

    def next(self) -> "MonthKey":
        return self.shift(1)

    def steps_since(self, origin: "MonthKey") -> int:
        return self.ordinal - origin.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def month_range(start: MonthKey, end: MonthKey) -> list[MonthKey]:
    """Inclusive range of months; empty if end precedes start"""
    return [MonthKey.from_ordinal(o) for o in range(start.ordinal, end.ordinal + 1)]
