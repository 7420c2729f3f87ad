"""MiniLang: a small imperative language parsed by recursive descent.

Statements: assignment, if/else, while, return, function definition, and
bare call statements. Expressions: integer/float literals, identifiers,
calls, and binary operators (+ - * / == != < <= > >=). Whitespace and
``#``-to-end-of-line comments never reach the AST. The grammar is published
in docs/minilang.ebnf.

Node types produced: Program, FuncDef, Params, Block, Assign, If, While,
Return, BinOp, Call, Name, Literal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ParseError
from .tree import AstTree, AstNode, DraftNode, freeze

KEYWORDS = {"if", "else", "while", "return", "def"}
COMPARISON_OPS = ("==", "!=", "<=", ">=", "<", ">")
ADDITIVE_OPS = ("+", "-")
TERM_OPS = ("*", "/")
PUNCT = ("(", ")", "{", "}", ",", ";", "=")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, NUMBER, OP, PUNCT, KEYWORD, EOF
    text: str
    offset: int
    line: int
    column: int

    @property
    def end(self) -> int:
        return self.offset + len(self.text)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                advance(1)
            continue
        start, sline, scol = i, line, col
        if ch.isdigit():
            while i < n and source[i].isdigit():
                advance(1)
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                advance(1)
                while i < n and source[i].isdigit():
                    advance(1)
            tokens.append(Token("NUMBER", source[start:i], start, sline, scol))
            continue
        if ch.isalpha() or ch == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                advance(1)
            text = source[start:i]
            kind = "KEYWORD" if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, start, sline, scol))
            continue
        two = source[i:i + 2]
        if two in ("==", "!=", "<=", ">="):
            advance(2)
            tokens.append(Token("OP", two, start, sline, scol))
            continue
        if ch in "+-*/<>":
            advance(1)
            tokens.append(Token("OP", ch, start, sline, scol))
            continue
        if ch in PUNCT:
            advance(1)
            tokens.append(Token("PUNCT", ch, start, sline, scol))
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col, i)
    tokens.append(Token("EOF", "", n, line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str) -> ParseError:
        t = self.cur
        return ParseError(message, t.line, t.column, t.offset)

    def eat(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.cur
        if t.kind != kind or (text is not None and t.text != text):
            expected = text if text is not None else kind
            got = t.text if t.text else "end of input"
            raise self.error(f"expected {expected!r}, got {got!r}")
        self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.cur
        return t.kind == kind and (text is None or t.text == text)

    # -- statements --------------------------------------------------------

    def parse_program(self) -> DraftNode:
        stmts = []
        while not self.at("EOF"):
            stmts.append(self.parse_statement())
        end = stmts[-1].span[0] + stmts[-1].span[1] if stmts else 0
        return DraftNode("Program", None, stmts, (0, end))

    def parse_statement(self) -> DraftNode:
        if self.at("KEYWORD", "if"):
            return self.parse_if()
        if self.at("KEYWORD", "while"):
            return self.parse_while()
        if self.at("KEYWORD", "return"):
            return self.parse_return()
        if self.at("KEYWORD", "def"):
            return self.parse_funcdef()
        if self.at("IDENT") and self.tokens[self.pos + 1].text == "=":
            return self.parse_assign()
        # bare expression statement (typically a call); widen to include ';'
        expr = self.parse_expr()
        semi = self.eat("PUNCT", ";")
        expr.span = (expr.span[0], semi.end - expr.span[0])
        return expr

    def parse_assign(self) -> DraftNode:
        name_tok = self.eat("IDENT")
        target = DraftNode("Name", name_tok.text, [],
                           (name_tok.offset, len(name_tok.text)))
        self.eat("PUNCT", "=")
        value = self.parse_expr()
        semi = self.eat("PUNCT", ";")
        return DraftNode("Assign", None, [target, value],
                         (name_tok.offset, semi.end - name_tok.offset))

    def parse_if(self) -> DraftNode:
        kw = self.eat("KEYWORD", "if")
        self.eat("PUNCT", "(")
        cond = self.parse_expr()
        self.eat("PUNCT", ")")
        then_block = self.parse_block()
        children = [cond, then_block]
        end = then_block.span[0] + then_block.span[1]
        if self.at("KEYWORD", "else"):
            self.eat("KEYWORD", "else")
            else_block = self.parse_block()
            children.append(else_block)
            end = else_block.span[0] + else_block.span[1]
        return DraftNode("If", None, children, (kw.offset, end - kw.offset))

    def parse_while(self) -> DraftNode:
        kw = self.eat("KEYWORD", "while")
        self.eat("PUNCT", "(")
        cond = self.parse_expr()
        self.eat("PUNCT", ")")
        body = self.parse_block()
        end = body.span[0] + body.span[1]
        return DraftNode("While", None, [cond, body], (kw.offset, end - kw.offset))

    def parse_return(self) -> DraftNode:
        kw = self.eat("KEYWORD", "return")
        children = []
        if not self.at("PUNCT", ";"):
            children.append(self.parse_expr())
        semi = self.eat("PUNCT", ";")
        return DraftNode("Return", None, children, (kw.offset, semi.end - kw.offset))

    def parse_funcdef(self) -> DraftNode:
        kw = self.eat("KEYWORD", "def")
        name_tok = self.eat("IDENT")
        lparen = self.eat("PUNCT", "(")
        params = []
        if not self.at("PUNCT", ")"):
            while True:
                p = self.eat("IDENT")
                params.append(DraftNode("Name", p.text, [], (p.offset, len(p.text))))
                if not self.at("PUNCT", ","):
                    break
                self.eat("PUNCT", ",")
        rparen = self.eat("PUNCT", ")")
        params_node = DraftNode("Params", None, params,
                                (lparen.offset, rparen.end - lparen.offset))
        body = self.parse_block()
        end = body.span[0] + body.span[1]
        return DraftNode("FuncDef", name_tok.text, [params_node, body],
                         (kw.offset, end - kw.offset))

    def parse_block(self) -> DraftNode:
        lbrace = self.eat("PUNCT", "{")
        stmts = []
        while not self.at("PUNCT", "}"):
            if self.at("EOF"):
                raise self.error("expected '}', got end of input")
            stmts.append(self.parse_statement())
        rbrace = self.eat("PUNCT", "}")
        return DraftNode("Block", None, stmts,
                         (lbrace.offset, rbrace.end - lbrace.offset))

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> DraftNode:
        return self.parse_comparison()

    def parse_comparison(self) -> DraftNode:
        left = self.parse_additive()
        if self.at("OP") and self.cur.text in COMPARISON_OPS:
            op = self.eat("OP")
            right = self.parse_additive()
            return self._binop(op.text, left, right)
        return left

    def parse_additive(self) -> DraftNode:
        left = self.parse_term()
        while self.at("OP") and self.cur.text in ADDITIVE_OPS:
            op = self.eat("OP")
            right = self.parse_term()
            left = self._binop(op.text, left, right)
        return left

    def parse_term(self) -> DraftNode:
        left = self.parse_factor()
        while self.at("OP") and self.cur.text in TERM_OPS:
            op = self.eat("OP")
            right = self.parse_factor()
            left = self._binop(op.text, left, right)
        return left

    @staticmethod
    def _binop(op: str, left: DraftNode, right: DraftNode) -> DraftNode:
        start = left.span[0]
        end = right.span[0] + right.span[1]
        return DraftNode("BinOp", op, [left, right], (start, end - start))

    def parse_factor(self) -> DraftNode:
        if self.at("NUMBER"):
            t = self.eat("NUMBER")
            return DraftNode("Literal", t.text, [], (t.offset, len(t.text)))
        if self.at("IDENT"):
            if self.tokens[self.pos + 1].text == "(":
                return self.parse_call()
            t = self.eat("IDENT")
            return DraftNode("Name", t.text, [], (t.offset, len(t.text)))
        if self.at("PUNCT", "("):
            self.eat("PUNCT", "(")
            expr = self.parse_expr()
            self.eat("PUNCT", ")")
            return expr
        raise self.error(f"expected expression, got {self.cur.text or 'end of input'!r}")

    def parse_call(self) -> DraftNode:
        name_tok = self.eat("IDENT")
        self.eat("PUNCT", "(")
        args = []
        if not self.at("PUNCT", ")"):
            while True:
                args.append(self.parse_expr())
                if not self.at("PUNCT", ","):
                    break
                self.eat("PUNCT", ",")
        rparen = self.eat("PUNCT", ")")
        return DraftNode("Call", name_tok.text, args,
                         (name_tok.offset, rparen.end - name_tok.offset))


def parse_minilang(source: str) -> AstTree:
    """Parse MiniLang source into an AstTree with pre-order node ids.

    Raises ParseError (carrying line/column/offset) on malformed input.
    Deterministic: identical source yields identical trees, ids included.
    """
    parser = _Parser(source)
    draft = parser.parse_program()
    if not parser.at("EOF"):
        raise parser.error(f"unexpected {parser.cur.text!r} after program")
    return freeze(draft, source_text=source)


# ---------------------------------------------------------------------------
# Unparsing (used by the synthetic-corpus generator and round-trip oracles)

_STATEMENT_TYPES = {"Assign", "If", "While", "Return", "FuncDef"}


def unparse(tree: AstTree) -> str:
    """Render a tree back to MiniLang source; reparsing yields an isomorphic
    tree. Sub-expressions of BinOps are parenthesized so shape survives."""
    lines: list[str] = []
    for stmt in tree.root.children:
        _emit_statement(stmt, 0, lines)
    return "\n".join(lines) + ("\n" if lines else "")


def _emit_statement(node: AstNode, indent: int, lines: list[str]) -> None:
    pad = "    " * indent
    t = node.node_type
    if t == "Assign":
        target, value = node.children
        lines.append(f"{pad}{target.label} = {_expr(value)};")
    elif t == "If":
        cond = node.children[0]
        lines.append(f"{pad}if ({_expr(cond)}) {{")
        for s in node.children[1].children:
            _emit_statement(s, indent + 1, lines)
        if len(node.children) == 3:
            lines.append(f"{pad}}} else {{")
            for s in node.children[2].children:
                _emit_statement(s, indent + 1, lines)
        lines.append(f"{pad}}}")
    elif t == "While":
        cond, body = node.children
        lines.append(f"{pad}while ({_expr(cond)}) {{")
        for s in body.children:
            _emit_statement(s, indent + 1, lines)
        lines.append(f"{pad}}}")
    elif t == "Return":
        if node.children:
            lines.append(f"{pad}return {_expr(node.children[0])};")
        else:
            lines.append(f"{pad}return;")
    elif t == "FuncDef":
        params = ", ".join(p.label or "" for p in node.children[0].children)
        lines.append(f"{pad}def {node.label}({params}) {{")
        for s in node.children[1].children:
            _emit_statement(s, indent + 1, lines)
        lines.append(f"{pad}}}")
    else:
        # bare expression statement (calls, or anything expression-shaped)
        lines.append(f"{pad}{_expr(node)};")


def _expr(node: AstNode) -> str:
    t = node.node_type
    if t == "Literal":
        return node.label or "0"
    if t == "Name":
        return node.label or "_"
    if t == "Call":
        return f"{node.label}(" + ", ".join(_expr(a) for a in node.children) + ")"
    if t == "BinOp":
        left, right = node.children
        ls = _expr(left)
        rs = _expr(right)
        if left.node_type == "BinOp":
            ls = f"({ls})"
        if right.node_type == "BinOp":
            rs = f"({rs})"
        return f"{ls} {node.label} {rs}"
    raise ValueError(f"cannot unparse node type {t!r} as an expression")
