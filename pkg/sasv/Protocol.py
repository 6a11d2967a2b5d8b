# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Readers and writers for ASVspoof-style protocol files and SASV trial lists.

A CM protocol line has five whitespace-separated fields:

    LA_0079 LA_T_1138215 - - bonafide
    LA_0079 LA_T_0000001 - A01 spoof

(speaker, utterance, unused, system id or "-", key).  A trial line is

    enroll_1,enroll_2,enroll_3 test_id target|nontarget|spoof
"""
import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from sasv.Datatypes import ContractError, TRIAL_LABELS

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class ProtocolError(ContractError):
    """Exception raised when a protocol or trial line cannot be parsed."""

    pass


# regular expressions to decode protocol and trial lines
BLANK_RE = re.compile(r"^\s*$")
PROTOCOL_RE = re.compile(
    r"""^\s*(?P<speaker>\S+)\s+
        (?P<utt>\S+)\s+
        (?P<unused>\S+)\s+
        (?P<system>\S+)\s+
        (?P<key>\S+)\s*$""",
    re.VERBOSE,
)
SYSTEM_RE = re.compile(r"^(-|A\d\d)$")
TRIAL_RE = re.compile(
    r"""^\s*(?P<enroll>[^\s,]+(,[^\s,]+)*)\s+
        (?P<test>\S+)\s+
        (?P<label>\S+)\s*$""",
    re.VERBOSE,
)

PROTOCOL_KEYS = ["bonafide", "spoof"]


@dataclass(frozen=True)
class ProtocolRecord(object):
    """One utterance of a CM protocol file."""

    speaker: str
    utt: str
    system: Optional[str]
    key: str

    def string(self) -> str:
        return "%s %s - %s %s" % (self.speaker, self.utt, self.system or "-", self.key)


@dataclass(frozen=True)
class TrialRecord(object):
    """One evaluation trial: enrollment utterances, a test utterance and a label."""

    enroll_utt_ids: Tuple[str, ...]
    test_utt_id: str
    label: str

    def __post_init__(self):
        if not self.enroll_utt_ids:
            raise ContractError("trial has an empty enrollment list")
        if self.label not in TRIAL_LABELS:
            raise ContractError("unrecognized trial label: '" + str(self.label) + "'")
        if self.test_utt_id in self.enroll_utt_ids:
            raise ContractError(
                "test utterance '%s' is also an enrollment utterance" % self.test_utt_id
            )

    def string(self) -> str:
        return "%s %s %s" % (",".join(self.enroll_utt_ids), self.test_utt_id, self.label)


def _lines(path):
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("ascii").replace("\r\n", "\n")
            except UnicodeDecodeError as err:
                raise ProtocolError("line %d: not ASCII text: %s" % (lineno, err)) from err
            if BLANK_RE.match(line):
                continue
            yield lineno, line


def parse_protocol_line(line: str, lineno: int = 0) -> ProtocolRecord:
    m = PROTOCOL_RE.match(line)
    if not m:
        raise ProtocolError("line %d: expected 5 fields: '%s'" % (lineno, line.strip()))
    d = m.groupdict()
    if d["unused"] != "-":
        raise ProtocolError("line %d: third field must be '-': '%s'" % (lineno, d["unused"]))
    if not SYSTEM_RE.match(d["system"]):
        raise ProtocolError("line %d: unrecognized system id: '%s'" % (lineno, d["system"]))
    if d["key"] not in PROTOCOL_KEYS:
        raise ProtocolError("line %d: unknown key: '%s'" % (lineno, d["key"]))
    system = None if d["system"] == "-" else d["system"]
    if (system is None) != (d["key"] == "bonafide"):
        raise ProtocolError(
            "line %d: system '%s' disagrees with key '%s'" % (lineno, d["system"], d["key"])
        )
    return ProtocolRecord(d["speaker"], d["utt"], system, d["key"])


def parse_protocol(path) -> List[ProtocolRecord]:
    """Parse an ASVspoof 2019 LA CM protocol file."""
    records = [parse_protocol_line(line, lineno) for lineno, line in _lines(path)]
    _logger.debug("parsed %d protocol records from %s", len(records), path)
    return records


def format_protocol(records: Sequence[ProtocolRecord]) -> str:
    return "".join(r.string() + "\n" for r in records)


def parse_trial_line(line: str, lineno: int = 0) -> TrialRecord:
    m = TRIAL_RE.match(line)
    if not m:
        raise ProtocolError("line %d: expected 3 fields: '%s'" % (lineno, line.strip()))
    d = m.groupdict()
    if d["label"] not in TRIAL_LABELS:
        raise ProtocolError("line %d: unknown trial label: '%s'" % (lineno, d["label"]))
    try:
        return TrialRecord(tuple(d["enroll"].split(",")), d["test"], d["label"])
    except ContractError as err:
        raise ProtocolError("line %d: %s" % (lineno, err))


def parse_trials(path) -> List[TrialRecord]:
    """Parse a trial list file."""
    trials = [parse_trial_line(line, lineno) for lineno, line in _lines(path)]
    _logger.debug("parsed %d trials from %s", len(trials), path)
    return trials


def format_trials(trials: Sequence[TrialRecord]) -> str:
    return "".join(t.string() + "\n" for t in trials)
