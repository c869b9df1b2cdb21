"""Mutated-SQL corpus shared by the guard tests and the acceptance suite.

Base read-only statements over the sports fixture get spliced with write
payloads (INSERT/UPDATE/DELETE/DROP/ALTER and semicolon chains) at random
positions, in random casing, with random comment noise. Every generated
string is either rejected by the guard or provably harmless to execute.
"""

import random

BASE_SELECTS = [
    "SELECT * FROM players",
    "SELECT name, ppg FROM players WHERE ppg > 20",
    "SELECT t.name, COUNT(*) FROM players p JOIN teams t ON p.team_id = t.id GROUP BY t.name",
    "WITH top AS (SELECT * FROM players WHERE ppg > 15) SELECT name FROM top ORDER BY name",
    "SELECT name FROM players WHERE name LIKE 'A%' LIMIT 3",
    "SELECT AVG(ppg) AS avg_ppg FROM players WHERE retired = 0",
    "SELECT * FROM teams ORDER BY city DESC",
    "SELECT p.name, t.city FROM players p, teams t WHERE p.team_id = t.id",
]

WRITE_PAYLOADS = [
    "INSERT INTO players VALUES (99, 'X', 1, 0.0, 0)",
    "UPDATE players SET ppg = 0",
    "DELETE FROM players",
    "DROP TABLE players",
    "ALTER TABLE players ADD COLUMN hacked INTEGER",
    "CREATE TABLE pwned (x INTEGER)",
    "REPLACE INTO players VALUES (1, 'Y', 1, 0.0, 0)",
    "PRAGMA writable_schema = 1",
    "ATTACH DATABASE '/tmp/evil.db' AS evil",
    "VACUUM",
]

STRING_INJECTIONS = [
    "'; DROP TABLE players; --",
    "' OR 1=1; DELETE FROM players WHERE '1'='1",
    "''; UPDATE players SET ppg=0; --",
]

COMMENTS = ["/* c */", "-- tail", "/*x*/"]


def _random_case(rng: random.Random, text: str) -> str:
    return "".join(c.upper() if rng.random() < 0.5 else c.lower() for c in text)


def mutate(rng: random.Random, base: str) -> str:
    roll = rng.random()
    if roll < 0.25:
        payload = rng.choice(WRITE_PAYLOADS)
        sep = rng.choice(["; ", " ; ", ";\n", ";"])
        pair = (base + sep + payload) if rng.random() < 0.5 else (payload + sep + base)
        return pair
    if roll < 0.45:
        payload = rng.choice(WRITE_PAYLOADS)
        pos = rng.randrange(len(base) + 1)
        return base[:pos] + " " + payload + " " + base[pos:]
    if roll < 0.6:
        inj = rng.choice(STRING_INJECTIONS)
        pos = rng.randrange(len(base) + 1)
        return base[:pos] + inj + base[pos:]
    if roll < 0.7:
        payload = rng.choice(WRITE_PAYLOADS)
        return _random_case(rng, payload + rng.choice(["", ";", " ;"]))
    if roll < 0.8:
        comment = rng.choice(COMMENTS)
        pos = rng.randrange(len(base) + 1)
        return base[:pos] + " " + comment + " " + base[pos:]
    if roll < 0.9:
        return _random_case(rng, base + rng.choice(["", ";"]))
    payload = rng.choice(WRITE_PAYLOADS)
    return _random_case(
        rng, f"WITH evil AS ({payload}) SELECT * FROM evil")


def corpus(n: int, seed: int = 20240811) -> list[str]:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        out.append(mutate(rng, rng.choice(BASE_SELECTS)))
    return out
