import json

from mirror.datasource import ResultTable
from mirror.orchestrator import Orchestrator
from mirror.providers import ScriptedProvider
from mirror.store import (
    SessionStore,
    canonical_json,
    session_from_dict,
    session_to_dict,
    table_from_dict,
    table_to_dict,
)

from test_orchestrator import happy_provider


def completed_session(sports_handle):
    orchestrator = Orchestrator(happy_provider())
    return orchestrator.run_query(sports_handle, "Who scores most?")


class TestSerialization:
    def test_session_round_trip_lossless(self, sports_handle):
        session = completed_session(sports_handle)
        doc = session_to_dict(session)
        restored = session_from_dict(doc)
        assert session_to_dict(restored) == doc
        assert restored.final_sql == session.final_sql
        assert restored.table == session.table
        assert restored.chart == session.chart
        assert restored.attempts[0].verdict == session.attempts[0].verdict

    def test_failed_session_round_trip(self, sports_handle):
        provider = ScriptedProvider([(None, "DROP TABLE teams")] * 3)
        session = Orchestrator(provider).run_query(sports_handle, "x")
        doc = session_to_dict(session)
        assert session_to_dict(session_from_dict(doc)) == doc

    def test_json_serializable(self, sports_handle):
        doc = session_to_dict(completed_session(sports_handle))
        json.loads(canonical_json(doc))

    def test_bytes_cells_survive(self):
        table = ResultTable(columns=(("payload", "BLOB"),),
                            rows=((b"\x00\xff",),))
        assert table_from_dict(table_to_dict(table)) == table


class TestSessionStore:
    def test_put_get_identity(self, tmp_path, sports_handle):
        store = SessionStore(tmp_path / "s.db")
        record = session_to_dict(completed_session(sports_handle))
        store.put(record)
        assert store.get(record["id"]) == record
        assert store.get_raw(record["id"]) == canonical_json(record)

    def test_upsert_replaces(self, tmp_path, sports_handle):
        store = SessionStore(tmp_path / "s.db")
        record = session_to_dict(completed_session(sports_handle))
        store.put(record)
        record2 = dict(record, summary="updated")
        store.put(record2)
        assert store.get(record["id"])["summary"] == "updated"
        assert store.ids() == [record["id"]]

    def test_reopen_serves_identical_bytes(self, tmp_path, sports_handle):
        path = tmp_path / "s.db"
        record = session_to_dict(completed_session(sports_handle))
        SessionStore(path).put(record)
        raw_before = SessionStore(path).get_raw(record["id"])
        reopened = SessionStore(path)
        assert reopened.get_raw(record["id"]) == raw_before == canonical_json(record)

    def test_missing_id_none(self, tmp_path):
        assert SessionStore(tmp_path / "s.db").get("ghost") is None
