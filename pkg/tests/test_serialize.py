from fractions import Fraction

import numpy as np

from blockhash.bounds import LE, BoundReport
from blockhash.exactreal import Surd
from blockhash.serialize import REPORT_HEADER, csv_text, dumps, fmt, params_str, report_row


def test_fmt():
    assert fmt(Fraction(3, 8)) == "3/8"
    assert fmt(Fraction(2)) == "2"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(5)) == "5"
    assert fmt(None) == ""
    assert fmt([Fraction(1, 2), 3]) == "[1/2,3]"
    assert fmt(Surd.sqrt(8)) == "2*sqrt(2)"


def test_float_round_trip():
    for v in (0.1, 1 / 3, 2 ** -40, 123456.789):
        assert float(fmt(v)) == v


def test_report_row_and_csv():
    r = BoundReport("lhl", Fraction(5, 8), Fraction(3, 4), LE, {"M": 2, "K": Fraction(4)})
    row = report_row(r)
    assert row == ["lhl", "K=4;M=2", "5/8", "3/4", "<=", "true", "true"]
    assert csv_text(REPORT_HEADER, [row]).splitlines()[1] == "lhl,K=4;M=2,5/8,3/4,<=,true,true"
    assert params_str({"b": 1, "a": 2}) == "a=2;b=1"


def test_dumps_sorted_and_stable():
    a = dumps({"b": Fraction(1, 3), "a": [1, Fraction(1, 2)]})
    assert a == dumps({"a": [1, Fraction(1, 2)], "b": Fraction(1, 3)})
    assert a.index('"a"') < a.index('"b"') and '"1/3"' in a
