import pytest

from meshroute.records import (LOG_COLUMNS, HopLogRecord, LogError, Message, logs_to_csv,
                               read_log, write_log)


def test_log_round_trip(tmp_path, small_baseline_logs):
    p = tmp_path / "log.csv"
    write_log(small_baseline_logs, p)
    back = read_log(p)
    assert logs_to_csv(back) == p.read_text(encoding="utf-8")
    assert len(back) == len(small_baseline_logs)
    for a, b in zip(back, small_baseline_logs):
        assert a.candidate_ids == b.candidate_ids
        assert a.chosen_id == b.chosen_id and a.hop_outcome == b.hop_outcome
        assert a.final_delivered == b.final_delivered
        assert a.buffer_ratio_at_to == pytest.approx(b.buffer_ratio_at_to, abs=1e-6)


def test_empty_candidates_and_missing_ids_survive(tmp_path):
    r = HopLogRecord(1, 2, "baseline", 0, 5, None, 10, 10, 0.0, 12.5, 0.0, [], None,
                     hop_outcome="no_route")
    write_log([r], tmp_path / "x.csv")
    (back,) = read_log(tmp_path / "x.csv")
    assert back.to_id is None and back.chosen_id is None and back.candidate_ids == []
    assert back.candidate_features == []


def test_header_is_checked(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(",".join(LOG_COLUMNS[:-1]) + "\n", encoding="utf-8")
    with pytest.raises(LogError):
        read_log(p)


def test_message_preconditions():
    with pytest.raises(ValueError):
        Message(1, 3, 3, ttl_initial=5)
    with pytest.raises(ValueError):
        Message(1, 3, 4, ttl_initial=0)
