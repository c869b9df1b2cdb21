import hashlib
import sqlite3
from pathlib import Path

import pytest

from mirror.datasource import DataSourceConfig, DataSourceRegistry, SourceKind

FIXTURES = Path(__file__).parent / "fixtures"

SPORTS_TEAMS = [
    (1, "Hawks", "Atlanta"),
    (2, "Comets", "Houston"),
    (3, "Pilots", "Seattle"),
]

SPORTS_PLAYERS = [
    (1, "Ava Carter", 1, 31.2, 0),
    (2, "Ben Okafor", 1, 24.5, 0),
    (3, "Cy Malone", 2, 18.75, 1),
    (4, "Dee Vantas", 2, 27.0, 0),
    (5, "Eli Strand", 3, 12.4, 1),
    (6, "Fox Adaire", 3, 22.9, 0),
]


def build_sports_db(path: Path) -> Path:
    ddl = (FIXTURES / "sports.sql").read_text(encoding="utf-8")
    conn = sqlite3.connect(path)
    try:
        conn.executescript(ddl)
        conn.executemany("INSERT INTO teams VALUES (?, ?, ?)", SPORTS_TEAMS)
        conn.executemany("INSERT INTO players VALUES (?, ?, ?, ?, ?)",
                         SPORTS_PLAYERS)
        conn.commit()
    finally:
        conn.close()
    return path


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture
def sports_db(tmp_path) -> Path:
    return build_sports_db(tmp_path / "sports.db")


@pytest.fixture
def registry() -> DataSourceRegistry:
    return DataSourceRegistry()


@pytest.fixture
def sports_handle(sports_db, registry):
    config = DataSourceConfig(id="sports", kind=SourceKind.EMBEDDED_FILE,
                              location=str(sports_db))
    return registry.register(config)


@pytest.fixture
def sports_meta(sports_handle):
    return sports_handle.introspect()
