"""
Test suite for month keys
"""

import pytest

from udikit.core.months import MonthKey, month_range


class TestMonthKey:
    """Test MonthKey"""

    def test_parse(self):
        """YYYY-MM with an optional leading zero"""
        assert MonthKey.parse("2017-09") == MonthKey(2017, 9)
        assert MonthKey.parse(" 2018-1 ") == MonthKey(2018, 1)
        assert str(MonthKey(2017, 9)) == "2017-09"

    @pytest.mark.parametrize("text", ["2017/09", "2017-13", "17-09", ""])
    def test_parse_invalid(self, text):
        """Malformed keys are rejected"""
        with pytest.raises(ValueError, match="Invalid month"):
            MonthKey.parse(text)

    def test_ordering_and_steps(self):
        """Keys order chronologically across year ends"""
        assert MonthKey(2017, 12) < MonthKey(2018, 1)
        assert MonthKey(2018, 1).steps_since(MonthKey(2017, 9)) == 4
        assert MonthKey(2017, 12).next() == MonthKey(2018, 1)
        assert MonthKey(2017, 3).shift(-3) == MonthKey(2016, 12)
        assert MonthKey(2017, 9).name == "September"

    def test_range(self):
        """Inclusive, empty when reversed"""
        months = month_range(MonthKey(2017, 11), MonthKey(2018, 2))
        assert [str(m) for m in months] == ["2017-11", "2017-12", "2018-01", "2018-02"]
        assert month_range(MonthKey(2018, 2), MonthKey(2017, 11)) == []
        assert len(month_range(MonthKey(2012, 4), MonthKey(2017, 8))) == 65
