"""Deladas source -> Goal.

Grammar (LL(1), recursive descent)::

    goal        := [components] [hosts] csdecl EOF
    components  := "components" "{" compdecl* "}"
    compdecl    := IDENT ["{" [portdecl ("," portdecl)*] "}"]
    portdecl    := word ":" ("in" | "out")
    hosts       := "hosts" "{" [IDENT ("," IDENT)*] "}"
    csdecl      := "constraintset" IDENT "=" "constraintset" "{" clause* "}"
    clause      := andexpr ("or" andexpr)*
    andexpr     := unary ("and" unary)*
    unary       := "not" unary | quant | "(" clause+ ")" | atom
    quant       := ("forall" | "exists") domain "(" clause+ ")"
    domain      := ("host" | IDENT) IDENT ("," IDENT)* "in" ("deployment" | IDENT)
    atom        := IDENT "." word "connectsto" IDENT "." word
                 | IDENT ("=" | "!=") IDENT
                 | "reachable" "(" IDENT "," IDENT ")"
                 | intexpr cmpop intexpr
    intexpr     := INT
                 | "card" "(" "instancesof" IDENT "in" ("deployment" | IDENT) ")"
                 | "card" "(" IDENT IDENT "connectsto" IDENT ")"

Adjacent clauses are conjoined, and bind looser than ``or``. ``word`` is an
identifier or keyword, so ports may be called ``in``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum

from deladas.model import (
    COMPARE_OPS,
    And,
    CardConnected,
    CardInstances,
    Compare,
    ComponentType,
    ConnectsTo,
    ConstraintExpr,
    Diagnostic,
    Direction,
    Domain,
    Exists,
    Forall,
    Goal,
    HostDescriptor,
    IntExpr,
    IntLiteral,
    Not,
    Or,
    PortRef,
    PortSpec,
    Reachable,
    Severity,
    VarCompare,
)

KEYWORDS = frozenset(
    {
        "forall",
        "exists",
        "host",
        "in",
        "deployment",
        "instancesof",
        "connectsto",
        "or",
        "and",
        "not",
        "constraintset",
        "components",
        "hosts",
    }
)

# Built-in constraint functions. Quantitative probes would register here.
BUILTIN_FUNCTIONS = ("card", "reachable")
EXTENSION_FUNCTIONS = ("latency", "bandwidth", "availability", "replication")

_SYMBOLS = ("!=", "<=", ">=", "(", ")", "{", "}", ",", ".", ":", "=", "<", ">")


class TokenKind(str, Enum):
    IDENT = "IDENT"
    KEYWORD = "KEYWORD"
    INT = "INT"
    SYMBOL = "SYMBOL"
    EOF = "EOF"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int

    def __repr__(self) -> str:
        return f"{self.kind.value} {self.text}"


class ParseError(Exception):
    """Raised with one or more ERROR diagnostics when source cannot become a Goal."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def _error(code: str, message: str, line: int, column: int) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, line, column)


# --------------------------------------------------------------------------
# Lexer


def tokenize(source: str) -> list[Token]:
    """Split Deladas text into tokens; ``//`` comments and whitespace are dropped.

    Raises ParseError on the first illegal character.
    """
    tokens: list[Token] = []
    line, col, i, n = 1, 1, 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isascii() and ch.isalpha():
            j = i + 1
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if ch.isascii() and ch.isdigit():
            j = i + 1
            while j < n and source[j].isascii() and source[j].isdigit():
                j += 1
            tokens.append(Token(TokenKind.INT, source[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(TokenKind.SYMBOL, sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError([_error("IllegalCharacter", f"illegal character {ch!r}", line, col)])
    return tokens


def _with_eof(tokens: list[Token], source: str) -> list[Token]:
    lines = source.split("\n")
    return tokens + [Token(TokenKind.EOF, "", len(lines), len(lines[-1]) + 1)]


# --------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in (TokenKind.SYMBOL, TokenKind.KEYWORD) and self.tok.text == text

    def fail(self, expected: list[str]) -> ParseError:
        tok = self.tok
        found = "end of input" if tok.kind is TokenKind.EOF else repr(tok.text)
        wanted = ", ".join(expected)
        msg = f"expected {wanted} but found {found}" if len(expected) == 1 else f"expected one of {wanted} but found {found}"
        return ParseError([_error("SyntaxError", msg, tok.line, tok.column)])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail([repr(text)])
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind is not TokenKind.IDENT:
            raise self.fail([what])
        return self.advance()

    def word(self, what: str = "port name") -> Token:
        if self.tok.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            raise self.fail([what])
        return self.advance()

    # -- resources ---------------------------------------------------------

    def goal(self) -> tuple[str, list[tuple[Token, list[tuple[Token, Direction]]]], list[Token], list[ConstraintExpr]]:
        comps: list[tuple[Token, list[tuple[Token, Direction]]]] = []
        hosts: list[Token] = []
        if self.at("components"):
            comps = self.components()
        if self.at("hosts"):
            hosts = self.hosts()
        if not self.at("constraintset"):
            expected = ["'constraintset'"]
            if not hosts:
                expected.insert(0, "'hosts'")
            if not comps and not hosts:
                expected.insert(0, "'components'")
            raise self.fail(expected)
        name, clauses = self.constraintset()
        if self.tok.kind is not TokenKind.EOF:
            raise self.fail(["end of input"])
        return name, comps, hosts, clauses

    def components(self) -> list[tuple[Token, list[tuple[Token, Direction]]]]:
        self.expect("components")
        self.expect("{")
        out = []
        while self.tok.kind is TokenKind.IDENT:
            name = self.advance()
            ports: list[tuple[Token, Direction]] = []
            if self.at("{"):
                self.advance()
                if not self.at("}"):
                    ports.append(self.port_decl())
                    while self.at(","):
                        self.advance()
                        ports.append(self.port_decl())
                self.expect("}")
            out.append((name, ports))
        if not self.at("}"):
            raise self.fail(["component name", "'}'"])
        self.advance()
        return out

    def port_decl(self) -> tuple[Token, Direction]:
        name = self.word()
        self.expect(":")
        tok = self.tok
        if tok.text == "in" and tok.kind is TokenKind.KEYWORD:
            self.advance()
            return name, Direction.IN
        if tok.text == "out" and tok.kind is TokenKind.IDENT:
            self.advance()
            return name, Direction.OUT
        raise self.fail(["'in'", "'out'"])

    def hosts(self) -> list[Token]:
        self.expect("hosts")
        self.expect("{")
        out: list[Token] = []
        if self.tok.kind is TokenKind.IDENT:
            out.append(self.advance())
            while self.at(","):
                self.advance()
                out.append(self.ident("host name"))
        if not self.at("}"):
            raise self.fail(["host name", "'}'"] if not out else ["','", "'}'"])
        self.advance()
        return out

    def constraintset(self) -> tuple[str, list[ConstraintExpr]]:
        self.expect("constraintset")
        name = self.ident("constraint set name").text
        self.expect("=")
        self.expect("constraintset")
        self.expect("{")
        clauses = []
        while not self.at("}"):
            if self.tok.kind is TokenKind.EOF:
                raise self.fail(["clause", "'}'"])
            clauses.append(self.clause())
        self.advance()
        return name, clauses

    # -- constraints ---------------------------------------------------------

    def starts_clause(self) -> bool:
        tok = self.tok
        if tok.kind in (TokenKind.IDENT, TokenKind.INT):
            return True
        return tok.text in ("forall", "exists", "not", "(") and tok.kind is not TokenKind.EOF

    def clause_block(self) -> ConstraintExpr:
        """``clause+`` up to (not including) a closing ``)``."""
        items = [self.clause()]
        while not self.at(")"):
            if not self.starts_clause():
                raise self.fail(["')'", "'or'", "'and'", "clause"])
            items.append(self.clause())
        return items[0] if len(items) == 1 else And(tuple(items))

    def clause(self) -> ConstraintExpr:
        items = [self.and_expr()]
        while self.at("or"):
            self.advance()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_expr(self) -> ConstraintExpr:
        items = [self.unary()]
        while self.at("and"):
            self.advance()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> ConstraintExpr:
        if self.at("not"):
            self.advance()
            return Not(self.unary())
        if self.at("forall") or self.at("exists"):
            return self.quantifier()
        if self.at("("):
            self.advance()
            body = self.clause_block()
            self.expect(")")
            return body
        return self.atom()

    def quantifier(self) -> ConstraintExpr:
        kw = self.advance()
        if self.at("host"):
            self.advance()
            type_name = None
        elif self.tok.kind is TokenKind.IDENT:
            type_name = self.advance().text
        else:
            raise self.fail(["'host'", "component type"])
        names = [self.ident("variable").text]
        while self.at(","):
            self.advance()
            names.append(self.ident("variable").text)
        self.expect("in")
        if self.at("deployment"):
            self.advance()
            within = None
        elif self.tok.kind is TokenKind.IDENT:
            within = self.advance().text
        else:
            raise self.fail(["'deployment'", "host variable"])
        self.expect("(")
        body = self.clause_block()
        self.expect(")")
        node = Forall if kw.text == "forall" else Exists
        return node(tuple(names), Domain(type_name, within), body, kw.line, kw.column)

    def atom(self) -> ConstraintExpr:
        tok = self.tok
        if tok.kind is TokenKind.IDENT:
            nxt = self.peek()
            if nxt.text == "(" and nxt.kind is TokenKind.SYMBOL:
                if tok.text == "reachable":
                    return self.reachable()
                if tok.text != "card":
                    raise self.unknown_function(tok)
                return self.comparison()
            if nxt.text == "." and nxt.kind is TokenKind.SYMBOL:
                return self.connects()
            if nxt.text in ("=", "!=") and nxt.kind is TokenKind.SYMBOL:
                self.advance()
                op = self.advance().text
                right = self.ident("variable")
                return VarCompare(tok.text, op, right.text, tok.line, tok.column)
            self.advance()
            raise self.fail(["'.'", "'='", "'!='", "'('"])
        if tok.kind is TokenKind.INT:
            return self.comparison()
        raise self.fail(["clause"])

    def unknown_function(self, tok: Token) -> ParseError:
        if tok.text in EXTENSION_FUNCTIONS:
            msg = (
                f"constraint function '{tok.text}' is a quantitative extension point "
                "with no probe installed; only card(...) and reachable(...) are available"
            )
        else:
            msg = f"unknown constraint function '{tok.text}'; expected card(...) or reachable(...)"
        return ParseError([_error("UnknownFunction", msg, tok.line, tok.column)])

    def reachable(self) -> ConstraintExpr:
        tok = self.advance()
        self.expect("(")
        a = self.ident("variable").text
        self.expect(",")
        b = self.ident("variable").text
        self.expect(")")
        return Reachable(a, b, tok.line, tok.column)

    def connects(self) -> ConstraintExpr:
        lv = self.ident("variable")
        self.expect(".")
        lp = self.word()
        kw = self.expect("connectsto")
        rv = self.ident("variable")
        self.expect(".")
        rp = self.word()
        return ConnectsTo(
            PortRef(lv.text, lp.text, lv.line, lv.column),
            PortRef(rv.text, rp.text, rv.line, rv.column),
            kw.line,
            kw.column,
        )

    def comparison(self) -> ConstraintExpr:
        start = self.tok
        lhs = self.int_expr()
        if not (self.tok.kind is TokenKind.SYMBOL and self.tok.text in COMPARE_OPS):
            raise self.fail([repr(op) for op in COMPARE_OPS])
        op = self.advance().text
        rhs = self.int_expr()
        return Compare(lhs, op, rhs, start.line, start.column)

    def int_expr(self) -> IntExpr:
        tok = self.tok
        if tok.kind is TokenKind.INT:
            self.advance()
            return IntLiteral(int(tok.text))
        if tok.kind is TokenKind.IDENT and tok.text == "card":
            self.advance()
            self.expect("(")
            if self.at("instancesof"):
                self.advance()
                type_name = self.ident("component type").text
                self.expect("in")
                if self.at("deployment"):
                    self.advance()
                    where = None
                else:
                    where = self.ident("host variable or 'deployment'").text
                self.expect(")")
                return CardInstances(type_name, where, tok.line, tok.column)
            if self.tok.kind is not TokenKind.IDENT:
                raise self.fail(["'instancesof'", "component type"])
            type_name = self.advance().text
            var = self.ident("variable").text
            self.expect("connectsto")
            target = self.ident("variable").text
            self.expect(")")
            return CardConnected(type_name, var, target, tok.line, tok.column)
        if tok.kind is TokenKind.IDENT and self.peek().text == "(":
            raise self.unknown_function(tok)
        raise self.fail(["integer", "card(...)"])


# --------------------------------------------------------------------------
# Scoped traversal shared by inference and validation


def _walk_scoped(expr: ConstraintExpr, env: dict[str, str | None], visit) -> None:
    """Call ``visit(node, env)`` on every node; env maps var -> type (None = host)."""
    visit(expr, env)
    if isinstance(expr, (Forall, Exists)):
        inner = dict(env)
        for v in expr.vars:
            inner[v] = expr.domain.type_name
        _walk_scoped(expr.body, inner, visit)
    elif isinstance(expr, (And, Or)):
        for item in expr.items:
            _walk_scoped(item, env, visit)
    elif isinstance(expr, Not):
        _walk_scoped(expr.item, env, visit)


def _quantified_types(constraints: tuple[ConstraintExpr, ...] | list[ConstraintExpr]) -> list[str]:
    found: list[str] = []

    def visit(node, env):
        if isinstance(node, (Forall, Exists)) and node.domain.type_name is not None:
            if node.domain.type_name not in found:
                found.append(node.domain.type_name)

    for c in constraints:
        _walk_scoped(c, {}, visit)
    return found


def _connect_usages(constraints) -> list[tuple[ConnectsTo, str | None, str | None]]:
    usages: list[tuple[ConnectsTo, str | None, str | None]] = []

    def visit(node, env):
        if isinstance(node, ConnectsTo):
            usages.append((node, env.get(node.left.var), env.get(node.right.var)))

    for c in constraints:
        _walk_scoped(c, {}, visit)
    return usages


def naming_hint(port: str) -> Direction | None:
    """Direction suggested by a port's name: ``in``/``cin`` are inputs, ``out``/``rou`` outputs."""
    low = port.lower()
    if low.endswith("in"):
        return Direction.IN
    if low.endswith("out") or low.endswith("ou"):
        return Direction.OUT
    if low.startswith("out"):
        return Direction.OUT
    if low.startswith("in"):
        return Direction.IN
    return None


def infer_ports(
    constraints: tuple[ConstraintExpr, ...] | list[ConstraintExpr],
    declared: tuple[ComponentType, ...] | list[ComponentType],
) -> tuple[list[ComponentType], list[Diagnostic]]:
    """Merge ports implied by ``connectsto`` usage into the declared component types.

    A connection always joins one OUT port to one IN port. Each port's direction
    comes from its declaration if there is one, else from its name (see
    ``naming_hint``), else from the port it is paired with; a connection with
    no directional information at all reads left-to-right as OUT -> IN.
    Component types that only appear as quantifier domains are added.

    Returns the merged types (declaration order, then first use) and
    diagnostics for declared ports contradicted by usage.
    """
    types: "OrderedDict[str, dict[str, Direction]]" = OrderedDict()
    declared_dirs: dict[tuple[str, str], Direction] = {}
    for ctype in declared:
        ports = types.setdefault(ctype.name, {})
        for p in ctype.ports:
            ports[p.name] = p.direction
            declared_dirs[(ctype.name, p.name)] = p.direction
    for name in _quantified_types(constraints):
        types.setdefault(name, {})

    usages = [
        (node, lt, rt)
        for node, lt, rt in _connect_usages(constraints)
        if lt is not None and rt is not None and lt in types and rt in types
    ]
    # port graph: each usage joins two (type, port) nodes that must differ in direction
    order: list[tuple[str, str]] = []
    adj: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for node, lt, rt in usages:
        a, b = (lt, node.left.port), (rt, node.right.port)
        for key in (a, b):
            if key not in adj:
                adj[key] = []
                order.append(key)
        adj[a].append(b)
        adj[b].append(a)

    resolved: dict[tuple[str, str], Direction] = {}
    for key in order:
        if key in declared_dirs:
            resolved[key] = declared_dirs[key]
        else:
            hint = naming_hint(key[1])
            if hint is not None:
                resolved[key] = hint

    def propagate(frontier: list[tuple[str, str]]) -> None:
        while frontier:
            cur = frontier.pop(0)
            for nb in adj[cur]:
                if nb not in resolved:
                    resolved[nb] = resolved[cur].opposite()
                    frontier.append(nb)

    propagate([k for k in order if k in resolved])
    for node, lt, rt in usages:
        a = (lt, node.left.port)
        if a not in resolved:
            resolved[a] = Direction.OUT
            propagate([a])

    diagnostics: list[Diagnostic] = []
    for node, lt, rt in usages:
        a, b = (lt, node.left.port), (rt, node.right.port)
        if resolved[a] is resolved[b] and (a in declared_dirs or b in declared_dirs):
            culprit = a if a in declared_dirs else b
            diagnostics.append(
                _error(
                    "PortDirectionConflict",
                    f"port {culprit[0]}.{culprit[1]} is declared {declared_dirs[culprit].value} "
                    f"but '{node.left.var}.{node.left.port} connectsto {node.right.var}.{node.right.port}' "
                    f"needs it to be {declared_dirs[culprit].opposite().value}",
                    node.line,
                    node.column,
                )
            )

    for (tname, pname), direction in resolved.items():
        types[tname].setdefault(pname, direction)

    merged = [
        ComponentType(name, tuple(PortSpec(p, d) for p, d in sorted(ports.items())))
        for name, ports in types.items()
    ]
    return merged, diagnostics


# --------------------------------------------------------------------------
# Validation


def validate_goal(goal: Goal) -> list[Diagnostic]:
    """Return every reference, binding and direction defect in ``goal`` (empty when clean)."""
    diags: list[Diagnostic] = []
    types = {t.name: t for t in goal.component_types}

    seen: set[str] = set()
    for t in goal.component_types:
        if t.name in seen:
            diags.append(_error("DuplicateName", f"component type '{t.name}' declared twice", 0, 0))
        seen.add(t.name)
        pnames = [p.name for p in t.ports]
        for p in sorted(set(n for n in pnames if pnames.count(n) > 1)):
            diags.append(_error("DuplicateName", f"port '{p}' declared twice on {t.name}", 0, 0))
    hseen: set[str] = set()
    for h in goal.hosts:
        if h.id in hseen:
            diags.append(_error("DuplicateName", f"host '{h.id}' declared twice", 0, 0))
        hseen.add(h.id)

    def pos(node) -> tuple[int, int]:
        return getattr(node, "line", 0), getattr(node, "column", 0)

    def need_type(name: str, node) -> None:
        if name not in types:
            diags.append(_error("UnknownComponentType", f"unknown component type '{name}'", *pos(node)))

    def need_var(var: str, env, node, kind: str) -> str | None:
        """Check ``var`` is bound; kind is 'instance', 'host' or 'any'. Returns its type."""
        if var not in env:
            diags.append(_error("UnboundVariable", f"variable '{var}' is not bound by an enclosing quantifier", *pos(node)))
            return None
        vtype = env[var]
        if kind == "instance" and vtype is None:
            diags.append(_error("KindMismatch", f"'{var}' ranges over hosts, a component instance is required", *pos(node)))
        elif kind == "host" and vtype is not None:
            diags.append(_error("KindMismatch", f"'{var}' ranges over {vtype} instances, a host is required", *pos(node)))
        return vtype

    def port_dir(vtype: str | None, ref: PortRef) -> Direction | None:
        if vtype is None or vtype not in types:
            return None
        spec = types[vtype].port(ref.port)
        if spec is None:
            diags.append(_error("UnknownPort", f"{vtype} has no port '{ref.port}'", ref.line, ref.column))
            return None
        return spec.direction

    def visit(node, env):
        if isinstance(node, (Forall, Exists)):
            dupes = sorted(v for v in set(node.vars) if node.vars.count(v) > 1)
            for v in dupes:
                diags.append(_error("DuplicateVariable", f"variable '{v}' bound twice in one quantifier", *pos(node)))
            for v in node.vars:
                if v in env:
                    diags.append(_error("ReboundVariable", f"variable '{v}' is already bound", *pos(node)))
            if node.domain.type_name is not None:
                need_type(node.domain.type_name, node)
            if node.domain.within is not None:
                if node.domain.type_name is None:
                    diags.append(_error("KindMismatch", "host quantifiers range over the deployment only", *pos(node)))
                else:
                    need_var(node.domain.within, env, node, "host")
        elif isinstance(node, Compare):
            for side in (node.lhs, node.rhs):
                if isinstance(side, CardInstances):
                    need_type(side.type_name, side)
                    if side.host_var is not None:
                        need_var(side.host_var, env, side, "host")
                elif isinstance(side, CardConnected):
                    need_type(side.type_name, side)
                    if side.var in env:
                        diags.append(_error("ReboundVariable", f"variable '{side.var}' is already bound", *pos(side)))
                    need_var(side.target, env, side, "instance")
        elif isinstance(node, ConnectsTo):
            lt = need_var(node.left.var, env, node.left, "instance")
            rt = need_var(node.right.var, env, node.right, "instance")
            ld, rd = port_dir(lt, node.left), port_dir(rt, node.right)
            if ld is not None and rd is not None and ld is rd:
                diags.append(
                    _error(
                        "DirectionMismatch",
                        f"'{node.left.var}.{node.left.port}' and '{node.right.var}.{node.right.port}' "
                        f"are both {ld.value} ports; a connection joins an out port to an in port",
                        *pos(node),
                    )
                )
        elif isinstance(node, Reachable):
            need_var(node.source, env, node, "instance")
            need_var(node.target, env, node, "instance")
        elif isinstance(node, VarCompare):
            a = node.left in env
            b = node.right in env
            need_var(node.left, env, node, "any")
            need_var(node.right, env, node, "any")
            if a and b and (env[node.left] is None) != (env[node.right] is None):
                diags.append(_error("KindMismatch", f"cannot compare host and instance variables", *pos(node)))

    for clause in goal.constraints:
        _walk_scoped(clause, {}, visit)
    return diags


# --------------------------------------------------------------------------
# Entry point


def parse_goal(source: str) -> Goal:
    """Parse Deladas text into a Goal with inferred component types and ports.

    Raises ParseError on syntax errors, duplicate declarations and port
    direction conflicts. Reference and binding problems are left to
    ``validate_goal``.
    """
    parser = _Parser(_with_eof(tokenize(source), source))
    name, comps, host_toks, clauses = parser.goal()

    diags: list[Diagnostic] = []
    declared: list[ComponentType] = []
    seen_types: set[str] = set()
    for tok, ports in comps:
        if tok.text in seen_types:
            diags.append(_error("DuplicateName", f"component type '{tok.text}' declared twice", tok.line, tok.column))
            continue
        seen_types.add(tok.text)
        seen_ports: set[str] = set()
        specs = []
        for ptok, direction in ports:
            if ptok.text in seen_ports:
                diags.append(_error("DuplicateName", f"port '{ptok.text}' declared twice on {tok.text}", ptok.line, ptok.column))
                continue
            seen_ports.add(ptok.text)
            specs.append(PortSpec(ptok.text, direction))
        declared.append(ComponentType(tok.text, tuple(specs)))
    hosts: list[HostDescriptor] = []
    seen_hosts: set[str] = set()
    for tok in host_toks:
        if tok.text in seen_hosts:
            diags.append(_error("DuplicateName", f"host '{tok.text}' declared twice", tok.line, tok.column))
            continue
        seen_hosts.add(tok.text)
        hosts.append(HostDescriptor(tok.text))

    merged, infer_diags = infer_ports(clauses, declared)
    diags.extend(infer_diags)
    if diags:
        raise ParseError(diags)
    return Goal(name, tuple(merged), tuple(hosts), tuple(clauses))


def load_goal(path) -> Goal:
    with open(path, encoding="utf-8") as fh:
        return parse_goal(fh.read())


# --------------------------------------------------------------------------
# Pretty printer


def _fmt_int(expr: IntExpr) -> str:
    if isinstance(expr, IntLiteral):
        return str(expr.value)
    if isinstance(expr, CardInstances):
        return f"card(instancesof {expr.type_name} in {expr.host_var or 'deployment'})"
    return f"card({expr.type_name} {expr.var} connectsto {expr.target})"


def _fmt_primary(expr: ConstraintExpr, indent: int) -> str:
    """Render ``expr`` where a single unary is expected (operand of or/and/not)."""
    if isinstance(expr, (And, Or)):
        pad = "    " * (indent + 1)
        inner = "\n".join(pad + _fmt_clause(i, indent + 1) for i in (expr.items if isinstance(expr, And) else (expr,)))
        return "(\n" + inner + " )"
    return _fmt_clause(expr, indent)


def _fmt_clause(expr: ConstraintExpr, indent: int) -> str:
    pad = "    " * (indent + 1)
    if isinstance(expr, (Forall, Exists)):
        kw = "forall" if isinstance(expr, Forall) else "exists"
        dom = "host" if expr.domain.is_host else expr.domain.type_name
        where = expr.domain.within or "deployment"
        body = expr.body.items if isinstance(expr.body, And) else (expr.body,)
        lines = "\n".join(pad + _fmt_clause(b, indent + 1) for b in body)
        return f"{kw} {dom} {','.join(expr.vars)} in {where} (\n{lines} )"
    if isinstance(expr, Or):
        return " or ".join(_fmt_primary(i, indent) for i in expr.items)
    if isinstance(expr, And):
        return " and ".join(_fmt_primary(i, indent) for i in expr.items)
    if isinstance(expr, Not):
        return "not " + _fmt_primary(expr.item, indent)
    if isinstance(expr, Compare):
        return f"{_fmt_int(expr.lhs)} {expr.op} {_fmt_int(expr.rhs)}"
    if isinstance(expr, ConnectsTo):
        return f"{expr.left.var}.{expr.left.port} connectsto {expr.right.var}.{expr.right.port}"
    if isinstance(expr, Reachable):
        return f"reachable({expr.source}, {expr.target})"
    if isinstance(expr, VarCompare):
        return f"{expr.left} {expr.op} {expr.right}"
    raise TypeError(f"not a constraint: {expr!r}")


def format_goal(goal: Goal) -> str:
    """Canonical Deladas text for ``goal``; parsing it yields an equal AST."""
    out = ["components {"]
    for t in goal.component_types:
        ports = ", ".join(f"{p.name}: {p.direction.value}" for p in t.ports)
        out.append(f"    {t.name} {{ {ports} }}" if ports else f"    {t.name}")
    out.append("}")
    out.append("hosts { " + ", ".join(h.id for h in goal.hosts) + " }" if goal.hosts else "hosts { }")
    out.append(f"constraintset {goal.name} = constraintset {{")
    for clause in goal.constraints:
        text = _fmt_clause(clause, 0)
        out.append(text if not isinstance(clause, And) else _fmt_primary(clause, 0))
    out.append("}")
    return "\n".join(out) + "\n"
