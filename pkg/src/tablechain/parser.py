r"""Recursive-descent parser and canonical serializer for command chains.

Grammar (keywords case-insensitive, identifiers bare or backtick-quoted,
string literals single-quoted with '' escaping):

    chain    := [command (";" command)*] ";"?
    command  := select | filter | sort | groupby | derive | slice | update
              | insert | delete | describe | plot | predict
    select   := SELECT col ("," col)*
    filter   := FILTER expr
    sort     := SORT col [ASC | DESC]
    groupby  := GROUPBY col ("," col)* [","] agg ("," agg)*
    agg      := (SUM|MEAN|COUNT|MIN|MAX) "(" col ")" [AS ident]
    derive   := DERIVE ident "=" expr
    slice    := SLICE (TOP int | int TO int)
    update   := UPDATE col "=" expr [WHERE expr]
    insert   := INSERT "(" literal ("," literal)* ")"
    delete   := DELETE WHERE expr
    describe := DESCRIBE [col ("," col)*]
    plot     := PLOT (BAR|LINE|SCATTER|HIST) col [col] [aggfn]
    predict  := PREDICT col [USING col ("," col)*]

    expr     := or ;  or := and (OR and)* ;  and := not (AND not)*
    not      := NOT not | cmp
    cmp      := add [("="|"!="|"<"|"<="|">"|">=") add]
    add      := mul (("+"|"-") mul)* ;  mul := unary (("*"|"/") unary)*
    unary    := "-" unary | primary      (minus before a number folds into the literal)
    primary  := literal | col | "(" expr ")"
    literal  := number | string | TRUE | FALSE | NULL

The serializer emits the canonical form: uppercase keywords, single spaces,
";\n" between commands, backticks only where required, minimal parentheses.
``parse_chain(serialize_chain(c))`` is structurally identical to ``c``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .commands import (
    Agg, Binary, Col, Command, CommandChain, DeleteWhere, Derive, Describe,
    Expr, Filter, GroupBy, InsertRow, Lit, Plot, Predict, Select, SliceRange,
    SliceTop, Sort, Unary, Update, AGG_FNS, PLOT_KINDS,
)
from .errors import ParseError
from .table import INT64_MAX, INT64_MIN, Value, normalize_name

KEYWORDS = {
    "SELECT", "FILTER", "SORT", "ASC", "DESC", "GROUPBY", "AS", "DERIVE",
    "SLICE", "TOP", "TO", "UPDATE", "WHERE", "INSERT", "DELETE", "DESCRIBE",
    "PLOT", "PREDICT", "USING", "AND", "OR", "NOT", "TRUE", "FALSE", "NULL",
    "SUM", "MEAN", "COUNT", "MIN", "MAX", "BAR", "LINE", "SCATTER", "HIST",
}

_BARE_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


# --- lexer -------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD IDENT NUMBER STRING OP EOF
    text: str
    value: object
    line: int
    col: int


_OPS = ("!=", "<=", ">=", ";", ",", "(", ")", "=", "<", ">", "+", "-", "*", "/")


def _lex(src: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(expected: str, found: str, l=None, c=None):
        raise ParseError(l or line, c or col, expected, found)

    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    err("closing quote", "end of input", start_line, start_col)
                if src[j] == "'":
                    if j + 1 < n and src[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                if src[j] == "\n":
                    line += 1
                    col = 0
                buf.append(src[j])
                j += 1
            col += j - i
            i = j
            tokens.append(Token("STRING", "".join(buf), "".join(buf), start_line, start_col))
            continue
        if ch == "`":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    err("closing backtick", "end of input", start_line, start_col)
                if src[j] == "`":
                    if j + 1 < n and src[j + 1] == "`":
                        buf.append("`")
                        j += 2
                        continue
                    j += 1
                    break
                if src[j] == "\n":
                    line += 1
                    col = 0
                buf.append(src[j])
                j += 1
            name = "".join(buf)
            if not name:
                err("identifier", "empty backticks", start_line, start_col)
            col += j - i
            i = j
            tokens.append(Token("IDENT", name, name, start_line, start_col))
            continue
        if ch.isdigit():
            m = re.match(r"\d+(\.\d*)?([eE][+-]?\d+)?", src[i:])
            text = m.group(0)
            if "." in text or "e" in text or "E" in text:
                val = float(text)
                if not math.isfinite(val):
                    err("finite numeric literal", text, start_line, start_col)
                tok = Token("NUMBER", text, val, start_line, start_col)
            else:
                iv = int(text)
                if iv > INT64_MAX:
                    err("integer within 64-bit range", text, start_line, start_col)
                tok = Token("NUMBER", text, iv, start_line, start_col)
            tokens.append(tok)
            i += len(text)
            col += len(text)
            continue
        if ch.isalpha() or ch == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", src[i:])
            text = m.group(0)
            kind = "KEYWORD" if text.upper() in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, text, start_line, start_col))
            i += len(text)
            col += len(text)
            continue
        for op in _OPS:
            if src.startswith(op, i):
                tokens.append(Token("OP", op, op, start_line, start_col))
                i += len(op)
                col += len(op)
                break
        else:
            err("a token", repr(ch))
    tokens.append(Token("EOF", "", None, line, col))
    return tokens


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, expected: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        found = tok.text if tok.kind != "EOF" else "end of input"
        raise ParseError(tok.line, tok.col, expected, found)

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.text.upper() == word:
            return self.next()
        self.error(word)

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.text.upper() in words

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in ops

    def expect_op(self, op: str) -> Token:
        if self.at_op(op):
            return self.next()
        self.error(f"'{op}'")

    def ident(self, what: str = "column identifier") -> str:
        tok = self.peek()
        if tok.kind == "IDENT":
            return self.next().text
        self.error(what)

    # chain / commands ---------------------------------------------------

    def chain(self) -> CommandChain:
        commands = []
        if self.peek().kind == "EOF":
            return CommandChain(())
        while True:
            start = self.peek()
            try:
                commands.append(self.command())
            except ValueError as e:  # AST invariant violations surface as parse errors
                raise ParseError(start.line, start.col, "a valid command", str(e)) from None
            if self.at_op(";"):
                self.next()
                if self.peek().kind == "EOF":
                    break
                continue
            if self.peek().kind == "EOF":
                break
            self.error("';' or end of input")
        start = self.tokens[0]
        try:
            return CommandChain(tuple(commands))
        except ValueError as e:
            raise ParseError(start.line, start.col, "a valid chain", str(e)) from None

    def command(self) -> Command:
        tok = self.peek()
        if tok.kind != "KEYWORD":
            self.error("a command keyword")
        word = tok.text.upper()
        handler = {
            "SELECT": self._select, "FILTER": self._filter, "SORT": self._sort,
            "GROUPBY": self._groupby, "DERIVE": self._derive, "SLICE": self._slice,
            "UPDATE": self._update, "INSERT": self._insert, "DELETE": self._delete,
            "DESCRIBE": self._describe, "PLOT": self._plot, "PREDICT": self._predict,
        }.get(word)
        if handler is None:
            self.error("a command keyword")
        self.next()
        return handler()

    def _collist(self) -> list[str]:
        cols = [self.ident()]
        while self.at_op(","):
            self.next()
            cols.append(self.ident())
        return cols

    def _select(self) -> Select:
        return Select(tuple(self._collist()))

    def _filter(self) -> Filter:
        return Filter(self.expr())

    def _sort(self) -> Sort:
        col = self.ident()
        ascending = True
        if self.at_kw("ASC"):
            self.next()
        elif self.at_kw("DESC"):
            self.next()
            ascending = False
        return Sort(col, ascending)

    def _at_agg_start(self, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        nxt = self.peek(ahead + 1)
        return (
            tok.kind == "KEYWORD"
            and tok.text.upper() in {f.upper() for f in AGG_FNS}
            and nxt.kind == "OP"
            and nxt.text == "("
        )

    def _agg(self) -> Agg:
        fn = self.next().text.lower()
        self.expect_op("(")
        col = self.ident()
        self.expect_op(")")
        out = f"{fn}_{normalize_name(col)}"
        if self.at_kw("AS"):
            self.next()
            out = self.ident("output name")
        return Agg(fn, col, out)

    def _groupby(self) -> GroupBy:
        keys = [self.ident()]
        while self.at_op(","):
            self.next()
            if self._at_agg_start():
                break
            keys.append(self.ident())
        if not self._at_agg_start():
            self.error("an aggregate like SUM(col)")
        aggs = [self._agg()]
        while self.at_op(","):
            self.next()
            aggs.append(self._agg())
        return GroupBy(tuple(keys), tuple(aggs))

    def _derive(self) -> Derive:
        name = self.ident("output name")
        self.expect_op("=")
        return Derive(name, self.expr())

    def _int_literal(self, what: str = "an integer") -> int:
        tok = self.peek()
        if tok.kind == "NUMBER" and isinstance(tok.value, int):
            self.next()
            return tok.value
        self.error(what)

    def _slice(self) -> Command:
        if self.at_kw("TOP"):
            self.next()
            return SliceTop(self._int_literal())
        lo = self._int_literal("TOP or an integer")
        self.expect_kw("TO")
        hi = self._int_literal()
        return SliceRange(lo, hi)

    def _update(self) -> Update:
        col = self.ident()
        self.expect_op("=")
        expr = self.expr()
        where: Expr = Lit(True)
        if self.at_kw("WHERE"):
            self.next()
            where = self.expr()
        return Update(col, expr, where)

    def _literal_value(self) -> Value:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.next()
            num = self.peek()
            if num.kind != "NUMBER":
                self.error("a number after '-'")
            self.next()
            return -num.value
        if tok.kind == "NUMBER":
            return self.next().value
        if tok.kind == "STRING":
            return self.next().value
        if self.at_kw("TRUE"):
            self.next()
            return True
        if self.at_kw("FALSE"):
            self.next()
            return False
        if self.at_kw("NULL"):
            self.next()
            return None
        self.error("a literal value")

    def _insert(self) -> InsertRow:
        self.expect_op("(")
        values = [self._literal_value()]
        while self.at_op(","):
            self.next()
            values.append(self._literal_value())
        self.expect_op(")")
        return InsertRow(tuple(values))

    def _delete(self) -> DeleteWhere:
        self.expect_kw("WHERE")
        return DeleteWhere(self.expr())

    def _describe(self) -> Describe:
        if self.peek().kind == "IDENT":
            return Describe(tuple(self._collist()))
        return Describe(None)

    def _plot(self) -> Plot:
        tok = self.peek()
        if not self.at_kw(*[k.upper() for k in PLOT_KINDS]):
            self.error("a plot kind (BAR, LINE, SCATTER, HIST)")
        kind = self.next().text.lower()
        x = self.ident()
        y = None
        agg = None
        if self.peek().kind == "IDENT":
            y = self.ident()
        if self.at_kw(*[f.upper() for f in AGG_FNS]):
            agg = self.next().text.lower()
        return Plot(kind, x, y, agg)

    def _predict(self) -> Predict:
        target = self.ident()
        using = None
        if self.at_kw("USING"):
            self.next()
            using = tuple(self._collist())
        return Predict(target, using)

    # expressions ---------------------------------------------------------

    def expr(self) -> Expr:
        return self._or()

    def _or(self) -> Expr:
        e = self._and()
        while self.at_kw("OR"):
            self.next()
            e = Binary("or", e, self._and())
        return e

    def _and(self) -> Expr:
        e = self._not()
        while self.at_kw("AND"):
            self.next()
            e = Binary("and", e, self._not())
        return e

    def _not(self) -> Expr:
        if self.at_kw("NOT"):
            self.next()
            return Unary("not", self._not())
        return self._cmp()

    def _cmp(self) -> Expr:
        e = self._add()
        if self.at_op("=", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            return Binary(op, e, self._add())
        return e

    def _add(self) -> Expr:
        e = self._mul()
        while self.at_op("+", "-"):
            op = self.next().text
            e = Binary(op, e, self._mul())
        return e

    def _mul(self) -> Expr:
        e = self._unary()
        while self.at_op("*", "/"):
            op = self.next().text
            e = Binary(op, e, self._unary())
        return e

    def _unary(self) -> Expr:
        if self.at_op("-"):
            self.next()
            if self.peek().kind == "NUMBER":  # fold into a negative literal
                return Lit(-self.next().value)
            return Unary("neg", self._unary())
        return self._primary()

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER" or tok.kind == "STRING":
            self.next()
            return Lit(tok.value)
        if self.at_kw("TRUE"):
            self.next()
            return Lit(True)
        if self.at_kw("FALSE"):
            self.next()
            return Lit(False)
        if self.at_kw("NULL"):
            self.next()
            return Lit(None)
        if tok.kind == "IDENT":
            self.next()
            return Col(tok.text)
        if self.at_op("("):
            self.next()
            e = self.expr()
            self.expect_op(")")
            return e
        self.error("an expression")


def parse_chain(text: str) -> CommandChain:
    return _Parser(_lex(text)).chain()


def parse_expr(text: str) -> Expr:
    """Parse a standalone expression (used by measure templates and tests)."""
    p = _Parser(_lex(text))
    e = p.expr()
    if p.peek().kind != "EOF":
        p.error("end of expression")
    return e


# --- canonical serializer -----------------------------------------------------

_PREC = {"or": 1, "and": 2, "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}
_NOT_PREC = 3
_NEG_PREC = 7
_ATOM_PREC = 8


def quote_ident(name: str) -> str:
    if _BARE_IDENT.match(name) and name.upper() not in KEYWORDS:
        return name
    return "`" + name.replace("`", "``") + "`"


def format_literal(v: Value) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    # datetimes are written as ISO text; evaluation coerces in comparisons
    return "'" + v.isoformat() + "'"


def _expr_prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _NOT_PREC if e.op == "not" else _NEG_PREC
    if isinstance(e, Lit) and isinstance(e.value, (int, float)) \
            and not isinstance(e.value, bool) and e.value < 0:
        return _NEG_PREC  # prints with a leading minus
    return _ATOM_PREC


def serialize_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        return format_literal(e.value)
    if isinstance(e, Col):
        return quote_ident(e.name)
    if isinstance(e, Unary):
        inner = serialize_expr(e.operand)
        if e.op == "not":
            if _expr_prec(e.operand) < _NOT_PREC:
                inner = f"({inner})"
            return f"NOT {inner}"
        # unary minus: parenthesize non-negative numeric literals so the text
        # does not re-fold into a plain negative literal
        needs = _expr_prec(e.operand) < _NEG_PREC or (
            isinstance(e.operand, Lit)
            and isinstance(e.operand.value, (int, float))
            and not isinstance(e.operand.value, bool)
            and e.operand.value >= 0
        )
        if needs:
            inner = f"({inner})"
        return f"-{inner}"
    op_prec = _PREC[e.op]
    lhs = serialize_expr(e.lhs)
    rhs = serialize_expr(e.rhs)
    if _expr_prec(e.lhs) < op_prec or (op_prec == 4 and _expr_prec(e.lhs) == 4):
        lhs = f"({lhs})"
    if _expr_prec(e.rhs) <= op_prec:
        rhs = f"({rhs})"
    kw = e.op.upper() if e.op in ("and", "or") else e.op
    return f"{lhs} {kw} {rhs}"


def serialize_command(c: Command) -> str:
    if isinstance(c, Select):
        return "SELECT " + ", ".join(quote_ident(n) for n in c.cols)
    if isinstance(c, Filter):
        return "FILTER " + serialize_expr(c.predicate)
    if isinstance(c, Sort):
        return f"SORT {quote_ident(c.col)} {'ASC' if c.ascending else 'DESC'}"
    if isinstance(c, GroupBy):
        keys = ", ".join(quote_ident(k) for k in c.keys)
        aggs = ", ".join(
            f"{a.fn.upper()}({quote_ident(a.col)}) AS {quote_ident(a.out_name)}"
            for a in c.aggs
        )
        return f"GROUPBY {keys} {aggs}"
    if isinstance(c, Derive):
        return f"DERIVE {quote_ident(c.out_name)} = {serialize_expr(c.expr)}"
    if isinstance(c, SliceTop):
        return f"SLICE TOP {c.n}"
    if isinstance(c, SliceRange):
        return f"SLICE {c.lo} TO {c.hi}"
    if isinstance(c, Update):
        return (
            f"UPDATE {quote_ident(c.col)} = {serialize_expr(c.expr)}"
            f" WHERE {serialize_expr(c.where)}"
        )
    if isinstance(c, InsertRow):
        return "INSERT (" + ", ".join(format_literal(v) for v in c.values) + ")"
    if isinstance(c, DeleteWhere):
        return "DELETE WHERE " + serialize_expr(c.predicate)
    if isinstance(c, Describe):
        if c.cols is None:
            return "DESCRIBE"
        return "DESCRIBE " + ", ".join(quote_ident(n) for n in c.cols)
    if isinstance(c, Plot):
        parts = ["PLOT", c.kind.upper(), quote_ident(c.x)]
        if c.y is not None:
            parts.append(quote_ident(c.y))
        if c.agg is not None:
            parts.append(c.agg.upper())
        return " ".join(parts)
    if isinstance(c, Predict):
        out = f"PREDICT {quote_ident(c.target)}"
        if c.using is not None:
            out += " USING " + ", ".join(quote_ident(n) for n in c.using)
        return out
    raise TypeError(f"unknown command {c!r}")


def serialize_chain(chain: CommandChain) -> str:
    return ";\n".join(serialize_command(c) for c in chain.commands)
