"""Test the protocol and trial file grammar."""

import pytest

from sasv.Datatypes import ContractError
from sasv.Protocol import (
    ProtocolError,
    ProtocolRecord,
    TrialRecord,
    format_protocol,
    format_trials,
    parse_protocol,
    parse_protocol_line,
    parse_trial_line,
    parse_trials,
)


def test_bonafide_line():
    rec = parse_protocol_line("LA_0079 LA_T_1138215 - - bonafide")
    assert rec.speaker == "LA_0079"
    assert rec.utt == "LA_T_1138215"
    assert rec.system is None
    assert rec.key == "bonafide"


def test_spoof_line():
    rec = parse_protocol_line("LA_0079 LA_T_0000001 - A01 spoof")
    assert rec.system == "A01"
    assert rec.key == "spoof"
    assert rec.string() == "LA_0079 LA_T_0000001 - A01 spoof"


@pytest.mark.parametrize(
    "line",
    [
        "LA_0079 LA_T_0000001 - A01",
        "LA_0079 LA_T_0000001 - A01 spoof extra",
        "LA_0079 LA_T_0000001 x A01 spoof",
        "LA_0079 LA_T_0000001 - B01 spoof",
        "LA_0079 LA_T_0000001 - A01 genuine",
        "LA_0079 LA_T_0000001 - - spoof",
        "LA_0079 LA_T_0000001 - A01 bonafide",
    ],
)
def test_bad_protocol_lines(line):
    with pytest.raises(ProtocolError):
        parse_protocol_line(line)


def test_protocol_error_names_line(tmp_path):
    path = tmp_path / "protocol.txt"
    path.write_text("LA_0079 LA_T_1 - - bonafide\n\nLA_0079 LA_T_2 - A01 fake\n")
    with pytest.raises(ProtocolError) as err:
        parse_protocol(path)
    assert "line 3" in str(err.value)
    assert "fake" in str(err.value)


def test_protocol_non_ascii_names_line(tmp_path):
    path = tmp_path / "protocol.txt"
    path.write_bytes(b"LA_0079 LA_T_1 - - bonafide\nLA_0079 LA_T_\xe9 - A01 spoof\n")
    with pytest.raises(ProtocolError) as err:
        parse_protocol(path)
    assert "line 2" in str(err.value)


def test_empty_protocol(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("")
    assert parse_protocol(path) == []


def test_protocol_round_trip(tmp_path):
    records = [
        ProtocolRecord("LA_0079", "LA_T_1138215", None, "bonafide"),
        ProtocolRecord("LA_0079", "LA_T_0000001", "A01", "spoof"),
        ProtocolRecord("LA_0080", "LA_T_0000002", "A06", "spoof"),
    ]
    path = tmp_path / "protocol.txt"
    path.write_text(format_protocol(records))
    assert parse_protocol(path) == records


def test_trial_line():
    trial = parse_trial_line("LA_E_1,LA_E_2,LA_E_3 LA_E_9 target")
    assert trial.enroll_utt_ids == ("LA_E_1", "LA_E_2", "LA_E_3")
    assert trial.test_utt_id == "LA_E_9"
    assert trial.label == "target"
    assert trial.string() == "LA_E_1,LA_E_2,LA_E_3 LA_E_9 target"


@pytest.mark.parametrize(
    "line",
    [
        "LA_E_1,LA_E_2 LA_E_9",
        "LA_E_1,LA_E_2 LA_E_9 impostor",
        "LA_E_1,,LA_E_2 LA_E_9 target",
        "LA_E_1,LA_E_9 LA_E_9 spoof",
    ],
)
def test_bad_trial_lines(line):
    with pytest.raises(ProtocolError):
        parse_trial_line(line)


def test_trial_record_contract():
    with pytest.raises(ContractError):
        TrialRecord((), "LA_E_9", "target")
    with pytest.raises(ContractError):
        TrialRecord(("LA_E_1",), "LA_E_9", "bogus")


def test_trials_round_trip(tmp_path):
    trials = [
        TrialRecord(("a", "b", "c"), "d", "target"),
        TrialRecord(("a", "b", "c"), "e", "nontarget"),
        TrialRecord(("f", "g", "h"), "i", "spoof"),
    ]
    path = tmp_path / "trials.txt"
    path.write_text(format_trials(trials))
    assert parse_trials(path) == trials
    assert format_trials(parse_trials(path)) == path.read_text()
