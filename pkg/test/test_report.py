"""Test the markdown comparison table."""

import pytest

from sasv.Datatypes import ContractError
from sasv.Metrics import MetricSuite
from sasv.Report import report_table


def test_table():
    rows = [
        ("Full model", MetricSuite(0.0486, 0.0806, 0.0050)),
        ("Score-sum", MetricSuite(0.1915, 0.3510, 0.0050)),
        ("Naive multi-task", MetricSuite(0.0875, 0.1601, 0.1223)),
    ]
    assert report_table(rows) == (
        "| Configuration | SASV | SV | SPF |\n"
        "|---|---:|---:|---:|\n"
        "| Full model | 4.86 | 8.06 | 0.50 |\n"
        "| Score-sum | 19.15 | 35.10 | 0.50 |\n"
        "| Naive multi-task | 8.75 | 16.01 | 12.23 |\n"
    )


def test_rounding():
    table = report_table([("x", MetricSuite(0.123449, 0.0, 1.0))])
    assert table.splitlines()[-1] == "| x | 12.34 | 0.00 | 100.00 |"


@pytest.mark.parametrize("name", ["", "   ", "a|b"])
def test_bad_names(name):
    with pytest.raises(ContractError):
        report_table([(name, MetricSuite(0.1, 0.1, 0.1))])


def test_no_rows():
    with pytest.raises(ContractError):
        report_table([])
