# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Markdown comparison tables of metric suites."""
import logging
from typing import Sequence, Tuple

from sasv.Datatypes import ContractError
from sasv.Metrics import MetricSuite

# logger
_logger = logging.getLogger(__name__)

COLUMNS = ["Configuration", "SASV", "SV", "SPF"]


def report_table(rows: Sequence[Tuple[str, MetricSuite]]) -> str:
    """One row per configuration, EERs in percent with 2 decimals."""
    if not rows:
        raise ContractError("report needs at least one row")
    lines = [
        "| " + " | ".join(COLUMNS) + " |",
        "|" + "|".join(["---"] + ["---:"] * (len(COLUMNS) - 1)) + "|",
    ]
    for name, suite in rows:
        name = name.strip() if name else ""
        if not name:
            raise ContractError("report row has an empty configuration name")
        if "|" in name:
            raise ContractError("configuration name may not contain '|': '" + name + "'")
        cells = [rate.string("PERCENT", 2) for rate in suite.rates()]
        lines.append("| " + " | ".join([name] + cells) + " |")
    return "\n".join(lines) + "\n"
