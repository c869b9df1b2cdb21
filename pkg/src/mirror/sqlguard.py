"""Read-only SQL validation.

A small hand-rolled tokenizer over a common-core SQL lexical grammar plus a
conservative allowlist. A statement is accepted only when it is a single
SELECT (or WITH ... SELECT) with no data-modifying, DDL, or administrative
keyword anywhere, including inside CTEs. Anything the tokenizer cannot make
sense of is rejected; the engine-level read-only connection remains as the
second layer of defense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ParseError

__all__ = [
    "Reason",
    "ValidationVerdict",
    "validate",
    "referenced_identifiers",
]


class Reason(str, Enum):
    OK = "ok"
    NOT_A_SELECT = "not-a-select"
    MULTIPLE_STATEMENTS = "multiple-statements"
    UNPARSEABLE = "unparseable"
    FORBIDDEN_CONSTRUCT = "forbidden-construct"


@dataclass(frozen=True)
class ValidationVerdict:
    accepted: bool
    reason: Reason
    referenced_tables: frozenset[str] = field(default_factory=frozenset)
    detail: str = ""

    def __post_init__(self):
        assert not self.accepted or self.reason is Reason.OK


# Statement classes that can modify data or schema, move data in/out of the
# database, or change connection/session state. Matched as bare word tokens,
# so occurrences inside strings, quoted identifiers, or comments don't count.
FORBIDDEN_KEYWORDS = frozenset({
    "INSERT", "UPDATE", "DELETE", "MERGE", "UPSERT",
    "CREATE", "DROP", "ALTER", "TRUNCATE", "RENAME",
    "GRANT", "REVOKE",
    "ATTACH", "DETACH", "PRAGMA", "VACUUM", "REINDEX", "ANALYZE",
    "BEGIN", "COMMIT", "ROLLBACK", "SAVEPOINT", "RELEASE", "END",
    "EXPLAIN", "CALL", "EXEC", "EXECUTE", "PREPARE", "DEALLOCATE", "DO",
    "SET", "RESET", "USE", "LOCK", "UNLOCK",
    "COPY", "LOAD", "UNLOAD", "IMPORT", "INSTALL",
    "INTO",  # blocks SELECT INTO; INSERT INTO is caught by INSERT anyway
    "RETURNING",
    # file/extension escape hatches exposed as functions by some engines
    "LOAD_EXTENSION", "WRITEFILE", "READFILE", "EDIT",
    "OUTFILE", "DUMPFILE", "LOAD_FILE", "INFILE",
})

# REPLACE is both a write statement (REPLACE INTO ...) and an everyday string
# function. The statement form never parses here (root must be SELECT/WITH and
# INTO is blocked), so the word is allowed only when called as a function.
_FUNCTION_ONLY = frozenset({"REPLACE"})


class TokenKind(str, Enum):
    WORD = "word"
    NUMBER = "number"
    STRING = "string"
    QIDENT = "qident"
    OP = "op"
    SEMI = "semi"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    pos: int

    def word(self) -> str | None:
        return self.value.upper() if self.kind is TokenKind.WORD else None


_WORD_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_CHARS = _WORD_START | frozenset("0123456789$")
_DIGITS = frozenset("0123456789")
_OP_CHARS = frozenset("+-*/%<>=!,.()|&~^?:@")
_SPACE = frozenset(" \t\r\n\f\v")


def tokenize(sql: str) -> list[Token]:
    """Lex ``sql`` into tokens, skipping whitespace and comments.

    Raises ParseError on unterminated strings/comments/quoted identifiers or
    any character outside the common-core lexical grammar.
    """
    tokens: list[Token] = []
    i, n = 0, len(sql)
    while i < n:
        ch = sql[i]
        if ch in _SPACE:
            i += 1
            continue
        if ch == "-" and sql.startswith("--", i):
            nl = sql.find("\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if ch == "/" and sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            if end < 0:
                raise ParseError(f"unterminated block comment at {i}")
            i = end + 2
            continue
        if ch == "'":
            j = _scan_quoted(sql, i, "'")
            tokens.append(Token(TokenKind.STRING, sql[i:j], i))
            i = j
            continue
        if ch == '"':
            j = _scan_quoted(sql, i, '"')
            tokens.append(Token(TokenKind.QIDENT, sql[i + 1:j - 1].replace('""', '"'), i))
            i = j
            continue
        if ch == "`":
            j = _scan_quoted(sql, i, "`")
            tokens.append(Token(TokenKind.QIDENT, sql[i + 1:j - 1].replace("``", "`"), i))
            i = j
            continue
        if ch == "[":
            end = sql.find("]", i + 1)
            if end < 0:
                raise ParseError(f"unterminated bracketed identifier at {i}")
            tokens.append(Token(TokenKind.QIDENT, sql[i + 1:end], i))
            i = end + 1
            continue
        if ch in _WORD_START:
            j = i + 1
            while j < n and sql[j] in _WORD_CHARS:
                j += 1
            tokens.append(Token(TokenKind.WORD, sql[i:j], i))
            i = j
            continue
        if ch in _DIGITS or (ch == "." and i + 1 < n and sql[i + 1] in _DIGITS):
            j = _scan_number(sql, i)
            tokens.append(Token(TokenKind.NUMBER, sql[i:j], i))
            i = j
            continue
        if ch == ";":
            tokens.append(Token(TokenKind.SEMI, ";", i))
            i += 1
            continue
        if ch in _OP_CHARS:
            tokens.append(Token(TokenKind.OP, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r} at {i}")
    return tokens


def _scan_quoted(sql: str, start: int, quote: str) -> int:
    """Return index one past the closing quote; doubled quotes escape."""
    i = start + 1
    n = len(sql)
    while i < n:
        if sql[i] == quote:
            if i + 1 < n and sql[i + 1] == quote:
                i += 2
                continue
            return i + 1
        i += 1
    raise ParseError(f"unterminated {quote!r}-quoted literal at {start}")


def _scan_number(sql: str, start: int) -> int:
    i, n = start, len(sql)
    if sql.startswith("0x", i) or sql.startswith("0X", i):
        i += 2
        while i < n and sql[i] in "0123456789abcdefABCDEF":
            i += 1
        return i
    seen_dot = False
    while i < n and (sql[i] in _DIGITS or (sql[i] == "." and not seen_dot)):
        if sql[i] == ".":
            seen_dot = True
        i += 1
    if i < n and sql[i] in "eE":
        j = i + 1
        if j < n and sql[j] in "+-":
            j += 1
        if j < n and sql[j] in _DIGITS:
            i = j
            while i < n and sql[i] in _DIGITS:
                i += 1
    return i


def validate(sql: str) -> ValidationVerdict:
    """Decide whether ``sql`` is a single read-only SELECT statement.

    Pure and deterministic; never raises. Rejection reasons follow the
    first check that fails: unparseable input, multiple statements, a
    non-SELECT root, or a forbidden keyword anywhere in the statement.
    """
    try:
        tokens = tokenize(sql)
    except ParseError as exc:
        return ValidationVerdict(False, Reason.UNPARSEABLE, detail=exc.message)
    if not tokens:
        return ValidationVerdict(False, Reason.UNPARSEABLE, detail="empty input")

    stmt, extra = _split_single(tokens)
    if extra:
        return ValidationVerdict(
            False, Reason.MULTIPLE_STATEMENTS,
            detail="content after first statement terminator",
        )
    if not stmt:
        return ValidationVerdict(False, Reason.UNPARSEABLE, detail="empty statement")

    tables = _try_referenced_tables(stmt)

    root = stmt[0].word()
    if root not in ("SELECT", "WITH"):
        return ValidationVerdict(
            False, Reason.NOT_A_SELECT, tables,
            detail=f"statement root is {stmt[0].value!r}",
        )

    bad = _find_forbidden(stmt)
    if bad is not None:
        return ValidationVerdict(
            False, Reason.FORBIDDEN_CONSTRUCT, tables,
            detail=f"forbidden keyword {bad.value.upper()} at {bad.pos}",
        )

    if not _parens_balanced(stmt):
        return ValidationVerdict(False, Reason.UNPARSEABLE, tables,
                                 detail="unbalanced parentheses")

    if root == "WITH" and not _with_body_is_select(stmt):
        return ValidationVerdict(
            False, Reason.NOT_A_SELECT, tables,
            detail="WITH clause whose final body is not a SELECT",
        )

    return ValidationVerdict(True, Reason.OK, tables)


def _split_single(tokens: list[Token]) -> tuple[list[Token], list[Token]]:
    """Split at the first semicolon; one trailing semicolon is tolerated."""
    for idx, tok in enumerate(tokens):
        if tok.kind is TokenKind.SEMI:
            return tokens[:idx], tokens[idx + 1:]
    return tokens, []


def _find_forbidden(tokens: list[Token]) -> Token | None:
    for idx, tok in enumerate(tokens):
        word = tok.word()
        if word is None:
            continue
        if word in _FUNCTION_ONLY:
            nxt = tokens[idx + 1] if idx + 1 < len(tokens) else None
            if nxt is not None and nxt.kind is TokenKind.OP and nxt.value == "(":
                continue
            return tok
        if word in FORBIDDEN_KEYWORDS:
            return tok
    return None


def _parens_balanced(tokens: list[Token]) -> bool:
    depth = 0
    for tok in tokens:
        if tok.kind is TokenKind.OP:
            if tok.value == "(":
                depth += 1
            elif tok.value == ")":
                depth -= 1
                if depth < 0:
                    return False
    return depth == 0


def _with_body_is_select(tokens: list[Token]) -> bool:
    """Check WITH [RECURSIVE] name [(cols)] AS [...] (...) [, ...] SELECT."""
    i = 1
    if i < len(tokens) and tokens[i].word() == "RECURSIVE":
        i += 1
    while True:
        if i >= len(tokens) or tokens[i].kind not in (TokenKind.WORD, TokenKind.QIDENT):
            return False
        i += 1
        i = _skip_group(tokens, i)  # optional column list
        if i >= len(tokens) or tokens[i].word() != "AS":
            return False
        i += 1
        if i < len(tokens) and tokens[i].word() == "NOT":
            i += 1
        if i < len(tokens) and tokens[i].word() == "MATERIALIZED":
            i += 1
        if i >= len(tokens) or not _is_op(tokens[i], "("):
            return False
        i = _skip_group(tokens, i)
        if i < len(tokens) and _is_op(tokens[i], ","):
            i += 1
            continue
        break
    return i < len(tokens) and tokens[i].word() in ("SELECT", "WITH")


def _is_op(tok: Token, value: str) -> bool:
    return tok.kind is TokenKind.OP and tok.value == value


def _skip_group(tokens: list[Token], i: int) -> int:
    """If tokens[i] opens a parenthesized group, return index past its close."""
    if i >= len(tokens) or not _is_op(tokens[i], "("):
        return i
    depth = 0
    while i < len(tokens):
        if _is_op(tokens[i], "("):
            depth += 1
        elif _is_op(tokens[i], ")"):
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return i


def referenced_identifiers(sql: str) -> set[str]:
    """Tables named in FROM/JOIN clauses, CTE names excluded.

    Unquoted identifiers are lowercased (SQL identifiers compare
    case-insensitively); quoted identifiers are kept verbatim.
    Raises ParseError when the input cannot be tokenized.
    """
    tokens = tokenize(sql)
    return _referenced_tables(tokens)


def _try_referenced_tables(tokens: list[Token]) -> frozenset[str]:
    try:
        return frozenset(_referenced_tables(tokens))
    except Exception:
        return frozenset()


# Words that terminate a table reference list and can never be an alias.
_REF_STOP = frozenset({
    "WHERE", "GROUP", "ORDER", "HAVING", "LIMIT", "OFFSET", "UNION",
    "INTERSECT", "EXCEPT", "JOIN", "ON", "USING", "LEFT", "RIGHT", "FULL",
    "INNER", "OUTER", "CROSS", "NATURAL", "WINDOW", "SELECT", "WITH",
    "STRAIGHT_JOIN", "FROM", "AND", "OR", "NOT", "AS", "SET", "FETCH", "FOR",
})


def _referenced_tables(tokens: list[Token]) -> set[str]:
    ctes = _collect_cte_names(tokens)
    found: dict[str, str] = {}
    i = 0
    while i < len(tokens):
        word = tokens[i].word()
        if word == "FROM":
            i = _parse_ref_list(tokens, i + 1, found, comma_list=True)
        elif word == "JOIN":
            i = _parse_ref_list(tokens, i + 1, found, comma_list=False)
        else:
            i += 1
    return {name for key, name in found.items() if key not in ctes}


def _collect_cte_names(tokens: list[Token]) -> set[str]:
    names: set[str] = set()
    i = 0
    while i < len(tokens):
        if tokens[i].word() == "WITH":
            i += 1
            if i < len(tokens) and tokens[i].word() == "RECURSIVE":
                i += 1
            while i < len(tokens) and tokens[i].kind in (TokenKind.WORD, TokenKind.QIDENT):
                names.add(_ident_key(tokens[i]))
                i += 1
                i = _skip_group(tokens, i)
                if i < len(tokens) and tokens[i].word() == "AS":
                    i += 1
                if i < len(tokens) and tokens[i].word() == "NOT":
                    i += 1
                if i < len(tokens) and tokens[i].word() == "MATERIALIZED":
                    i += 1
                i = _skip_group(tokens, i)
                if i < len(tokens) and _is_op(tokens[i], ","):
                    i += 1
                    continue
                break
        else:
            i += 1
    return names


def _ident_key(tok: Token) -> str:
    return tok.value.lower() if tok.kind is TokenKind.WORD else tok.value


def _ident_name(tok: Token) -> str:
    return tok.value.lower() if tok.kind is TokenKind.WORD else tok.value


def _parse_ref_list(tokens: list[Token], i: int, found: dict[str, str],
                    comma_list: bool) -> int:
    while True:
        i = _parse_one_ref(tokens, i, found)
        if comma_list and i < len(tokens) and _is_op(tokens[i], ","):
            i += 1
            continue
        return i


def _parse_one_ref(tokens: list[Token], i: int, found: dict[str, str]) -> int:
    if i >= len(tokens):
        return i
    if _is_op(tokens[i], "("):
        i = _skip_group(tokens, i)  # derived table or parenthesized join
        return _skip_alias(tokens, i)
    tok = tokens[i]
    if tok.kind not in (TokenKind.WORD, TokenKind.QIDENT):
        return i
    if tok.word() in _REF_STOP:
        return i
    parts = [tok]
    i += 1
    while i + 1 < len(tokens) and _is_op(tokens[i], ".") and \
            tokens[i + 1].kind in (TokenKind.WORD, TokenKind.QIDENT):
        parts.append(tokens[i + 1])
        i += 2
    if i < len(tokens) and _is_op(tokens[i], "("):
        return _skip_alias(tokens, _skip_group(tokens, i))  # table function
    name = ".".join(_ident_name(p) for p in parts)
    key = ".".join(_ident_key(p) for p in parts)
    found[key] = name
    return _skip_alias(tokens, i)


def _skip_alias(tokens: list[Token], i: int) -> int:
    if i < len(tokens) and tokens[i].word() == "AS":
        i += 1
        if i < len(tokens) and tokens[i].kind in (TokenKind.WORD, TokenKind.QIDENT):
            i += 1
        return i
    if i < len(tokens) and tokens[i].kind in (TokenKind.WORD, TokenKind.QIDENT) \
            and tokens[i].word() not in _REF_STOP:
        i += 1
    return i
