"""Recursive descent parser producing a :class:`SyntaxTree`."""

from __future__ import annotations

from .lexer import Token, TokenKind, tokenize
from .syntax import (
    PRIMITIVE_TYPE_NAMES,
    STRING,
    ApiDecl,
    Assign,
    BehaviorCall,
    BehaviorTypeDecl,
    BinaryOp,
    BoolLit,
    Call,
    ElseIf,
    Expr,
    ExprStmt,
    FieldDecl,
    If,
    ImportDecl,
    MapEntry,
    MapLit,
    ModelDecl,
    NullLit,
    NumberLit,
    Param,
    PathAccess,
    Return,
    SourcePos,
    Span,
    Stmt,
    StringLit,
    SyntaxTree,
    TemplateString,
    TypeExpr,
    TypeKind,
    VarDecl,
)

ATTRIBUTE_KEYS = ("pattern", "min", "max", "maxLength", "minLength")
TOP_LEVEL = ("import", "model", "type", "api")


class ParseError(Exception):
    def __init__(self, expected: str, found: Token):
        self.expected = expected
        self.found = found.text if found.kind is not TokenKind.EOF else "end of input"
        self.pos: SourcePos = found.span.start
        self.message = f"expected {expected}, found {self.found!r}"
        super().__init__(f"{self.pos}: {self.message}")


class ParseErrors(ParseError):
    """All errors collected from one parse; behaves like the first of them."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        first = errors[0]
        Exception.__init__(self, "; ".join(str(e) for e in errors))
        self.expected = first.expected
        self.found = first.found
        self.pos = first.pos
        self.message = first.message


class Parser:
    def __init__(self, tokens: list[Token]):
        if not tokens or tokens[-1].kind is not TokenKind.EOF:
            raise ValueError("token list must end with Eof")
        self.tokens = [t for t in tokens if t.kind is not TokenKind.COMMENT]
        self.pos = 0

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    @property
    def prev_end(self) -> SourcePos:
        if self.pos == 0:
            return self.tok.span.start
        return self.tokens[self.pos - 1].span.end

    def span_from(self, start: SourcePos) -> Span:
        return Span(start, self.prev_end)

    def expect_punct(self, text: str) -> Token:
        if not self.tok.is_punct(text):
            raise ParseError(repr(text), self.tok)
        return self.advance()

    def expect_keyword(self, text: str) -> Token:
        if not self.tok.is_keyword(text):
            raise ParseError(repr(text), self.tok)
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind is not TokenKind.IDENT:
            raise ParseError(what, self.tok)
        return self.advance()

    def expect_name(self, what: str) -> Token:
        """Identifier, also accepting keywords (field names, members, map keys)."""
        if self.tok.kind in (TokenKind.IDENT, TokenKind.KEYWORD, TokenKind.BOOL):
            return self.advance()
        raise ParseError(what, self.tok)

    # -- module --

    def parse_module(self) -> SyntaxTree:
        start = self.tok.span.start
        imports: list[ImportDecl] = []
        models: list[ModelDecl] = []
        behaviors: list[BehaviorTypeDecl] = []
        apis: list[ApiDecl] = []
        errors: list[ParseError] = []
        seen_decl = False
        while self.tok.kind is not TokenKind.EOF:
            begin = self.pos
            try:
                if self.tok.is_keyword("import"):
                    if seen_decl:
                        raise ParseError("declaration (imports must precede declarations)", self.tok)
                    imports.append(self.parse_import())
                elif self.tok.is_keyword("model"):
                    seen_decl = True
                    models.append(self.parse_model())
                elif self.tok.is_keyword("type"):
                    seen_decl = True
                    behaviors.append(self.parse_behavior_type())
                elif self.tok.is_keyword("api"):
                    seen_decl = True
                    apis.append(self.parse_api())
                else:
                    raise ParseError("'import', 'model', 'type' or 'api'", self.tok)
            except ParseError as err:
                errors.append(err)
                self.recover(begin)
        if errors:
            raise ParseErrors(errors)
        return SyntaxTree(
            tuple(imports), tuple(models), tuple(behaviors), tuple(apis),
            span=self.span_from(start) if self.pos else Span.point(start),
        )

    def recover(self, begin: int) -> None:
        if self.pos == begin:
            self.advance()
        while self.tok.kind is not TokenKind.EOF and not self.tok.is_keyword(*TOP_LEVEL):
            self.advance()

    def parse_import(self) -> ImportDecl:
        start = self.expect_keyword("import").span.start
        name = self.expect_ident("module name").text
        self.expect_punct(";")
        return ImportDecl(name, self.span_from(start))

    def parse_model(self) -> ModelDecl:
        start = self.expect_keyword("model").span.start
        name = self.expect_ident("model name").text
        self.expect_punct("{")
        fields: list[FieldDecl] = []
        while not self.tok.is_punct("}"):
            fields.append(self.parse_field())
            if not self.tok.is_punct(","):
                break
            self.advance()
        self.expect_punct("}")
        return ModelDecl(name, tuple(fields), self.span_from(start))

    def parse_field(self) -> FieldDecl:
        name_tok = self.expect_name("field name")
        start = name_tok.span.start
        optional = False
        if self.tok.is_punct("?"):
            self.advance()
            optional = True
        self.expect_punct(":")
        ftype = self.parse_type()
        attrs: list[tuple[str, object]] = []
        if self.tok.is_punct("("):
            self.advance()
            while True:
                key_tok = self.expect_ident("attribute name")
                if key_tok.text not in ATTRIBUTE_KEYS:
                    raise ParseError("one of " + ", ".join(ATTRIBUTE_KEYS), key_tok)
                if any(k == key_tok.text for k, _ in attrs):
                    raise ParseError("distinct attribute name", key_tok)
                self.expect_punct("=")
                attrs.append((key_tok.text, self.parse_literal()))
                if not self.tok.is_punct(","):
                    break
                self.advance()
            self.expect_punct(")")
        return FieldDecl(name_tok.text, optional, ftype, tuple(attrs), self.span_from(start))

    def parse_literal(self):
        tok = self.tok
        if tok.kind in (TokenKind.STRING, TokenKind.NUMBER, TokenKind.BOOL):
            self.advance()
            return tok.value
        if tok.is_punct("-") and self.peek().kind is TokenKind.NUMBER:
            self.advance()
            return -self.advance().value
        if tok.is_keyword("null"):
            self.advance()
            return None
        raise ParseError("literal", tok)

    def parse_behavior_type(self) -> BehaviorTypeDecl:
        start = self.expect_keyword("type").span.start
        if self.tok.kind is not TokenKind.AT_IDENT:
            raise ParseError("'@' behavior name", self.tok)
        name = self.advance().text[1:]
        self.expect_punct("=")
        self.expect_punct("(")
        params: list[TypeExpr] = []
        if not self.tok.is_punct(")"):
            params.append(self.parse_type())
            while self.tok.is_punct(","):
                self.advance()
                params.append(self.parse_type())
        self.expect_punct(")")
        self.expect_punct(":")
        ret = self.parse_type()
        return BehaviorTypeDecl(name, tuple(params), ret, self.span_from(start))

    def parse_api(self) -> ApiDecl:
        start = self.expect_keyword("api").span.start
        name = self.expect_ident("api name").text
        self.expect_punct("(")
        params: list[Param] = []
        if not self.tok.is_punct(")"):
            params.append(self.parse_param())
            while self.tok.is_punct(","):
                self.advance()
                params.append(self.parse_param())
        self.expect_punct(")")
        self.expect_punct(":")
        ret = self.parse_type()
        request = self.parse_block()
        self.expect_keyword("returns")
        returns = self.parse_block()
        return ApiDecl(name, tuple(params), ret, request, returns, self.span_from(start))

    def parse_param(self) -> Param:
        tok = self.expect_ident("parameter name")
        self.expect_punct(":")
        ptype = self.parse_type()
        return Param(tok.text, ptype, self.span_from(tok.span.start))

    def parse_type(self) -> TypeExpr:
        tok = self.tok
        start = tok.span.start
        if tok.is_punct("["):
            self.advance()
            elem = self.parse_type()
            self.expect_punct("]")
            return TypeExpr(TypeKind.ARRAY, element=elem, span=self.span_from(start))
        name = self.expect_ident("type").text
        if name == "map":
            self.expect_punct("[")
            key = self.parse_type()
            if key != STRING:
                raise ParseError("'string' map key type", self.tokens[self.pos - 1])
            self.expect_punct("]")
            value = self.parse_type()
            return TypeExpr(TypeKind.MAP, key=key, value=value, span=self.span_from(start))
        if name in PRIMITIVE_TYPE_NAMES:
            return TypeExpr(PRIMITIVE_TYPE_NAMES[name], span=self.span_from(start))
        return TypeExpr(TypeKind.NAMED, name=name, span=self.span_from(start))

    # -- statements --

    def parse_block(self) -> tuple[Stmt, ...]:
        self.expect_punct("{")
        stmts: list[Stmt] = []
        while not self.tok.is_punct("}"):
            if self.tok.kind is TokenKind.EOF:
                raise ParseError("'}'", self.tok)
            stmts.append(self.parse_stmt())
        self.advance()
        return tuple(stmts)

    def parse_stmt(self) -> Stmt:
        tok = self.tok
        start = tok.span.start
        if tok.is_keyword("var"):
            self.advance()
            name = self.expect_ident("variable name").text
            self.expect_punct("=")
            value = self.parse_expr()
            self.expect_punct(";")
            return VarDecl(name, value, self.span_from(start))
        if tok.is_keyword("return"):
            self.advance()
            value = self.parse_expr()
            self.expect_punct(";")
            return Return(value, self.span_from(start))
        if tok.is_keyword("if"):
            return self.parse_if()
        expr = self.parse_expr()
        if self.tok.is_punct("="):
            if not isinstance(expr, PathAccess):
                raise ParseError("';' (left side of '=' is not assignable)", self.tok)
            self.advance()
            value = self.parse_expr()
            self.expect_punct(";")
            return Assign(expr, value, self.span_from(start))
        self.expect_punct(";")
        return ExprStmt(expr, self.span_from(start))

    def parse_if(self) -> If:
        start = self.expect_keyword("if").span.start
        cond = self.parse_paren_cond()
        then = self.parse_block()
        elifs: list[ElseIf] = []
        orelse = None
        while self.tok.is_keyword("else"):
            else_start = self.advance().span.start
            if self.tok.is_keyword("if"):
                self.advance()
                c = self.parse_paren_cond()
                body = self.parse_block()
                elifs.append(ElseIf(c, body, self.span_from(else_start)))
            else:
                orelse = self.parse_block()
                break
        return If(cond, then, tuple(elifs), orelse, self.span_from(start))

    def parse_paren_cond(self) -> Expr:
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        return cond

    # -- expressions --

    def parse_expr(self) -> Expr:
        return self.parse_binary(0)

    _LEVELS = (("||",), ("&&",), ("==", "!="), ("+",))

    def parse_binary(self, level: int) -> Expr:
        if level == len(self._LEVELS):
            return self.parse_primary()
        start = self.tok.span.start
        lhs = self.parse_binary(level + 1)
        while self.tok.is_punct(*self._LEVELS[level]):
            op = self.advance().text
            rhs = self.parse_binary(level + 1)
            lhs = BinaryOp(op, lhs, rhs, self.span_from(start))
        return lhs

    def parse_args(self) -> tuple[Expr, ...]:
        self.expect_punct("(")
        args: list[Expr] = []
        if not self.tok.is_punct(")"):
            args.append(self.parse_expr())
            while self.tok.is_punct(","):
                self.advance()
                args.append(self.parse_expr())
        self.expect_punct(")")
        return tuple(args)

    def parse_primary(self) -> Expr:
        tok = self.tok
        start = tok.span.start
        kind = tok.kind
        if kind is TokenKind.STRING:
            self.advance()
            return StringLit(tok.value, tok.span)
        if kind is TokenKind.NUMBER:
            self.advance()
            return NumberLit(tok.value, tok.span)
        if tok.is_punct("-") and self.peek().kind is TokenKind.NUMBER:
            self.advance()
            return NumberLit(-self.advance().value, self.span_from(start))
        if kind is TokenKind.BOOL:
            self.advance()
            return BoolLit(tok.value, tok.span)
        if tok.is_keyword("null"):
            self.advance()
            return NullLit(tok.span)
        if kind is TokenKind.TEMPLATE_PART:
            return self.parse_template()
        if tok.is_punct("{"):
            return self.parse_map()
        if tok.is_punct("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        if kind is TokenKind.AT_IDENT:
            self.advance()
            args = self.parse_args()
            return BehaviorCall(tok.text[1:], args, self.span_from(start))
        if kind is TokenKind.IDENT:
            segments = [self.advance().text]
            while self.tok.is_punct("."):
                self.advance()
                segments.append(self.expect_name("member name").text)
            if self.tok.is_punct("("):
                if len(segments) != 2:
                    raise ParseError("call of the form Module.function(...)", self.tok)
                args = self.parse_args()
                return Call(segments[0], segments[1], args, self.span_from(start))
            return PathAccess(tuple(segments), self.span_from(start))
        raise ParseError("expression", tok)

    def parse_template(self) -> TemplateString:
        start = self.tok.span.start
        parts: list = []
        while True:
            part = self.advance()
            if part.value:
                parts.append(part.value)
            if not self.tok.is_punct("${"):
                break
            self.advance()
            parts.append(self.parse_expr())
            self.expect_punct("}")
            if self.tok.kind is not TokenKind.TEMPLATE_PART:
                raise ParseError("template text", self.tok)
        if not parts:
            parts.append("")
        return TemplateString(tuple(parts), self.span_from(start))

    def parse_map(self) -> MapLit:
        start = self.expect_punct("{").span.start
        entries: list[MapEntry] = []
        while not self.tok.is_punct("}"):
            key_tok = self.tok
            if key_tok.kind is TokenKind.STRING:
                self.advance()
                key = key_tok.value
            else:
                key = self.expect_name("map key").text
            self.expect_punct("=")
            value = self.parse_expr()
            self.expect_punct(",")
            entries.append(MapEntry(key, value, self.span_from(key_tok.span.start)))
        self.advance()
        return MapLit(tuple(entries), self.span_from(start))


def parse(tokens: list[Token]) -> SyntaxTree:
    """Parse a token list (ending in ``Eof``) into a syntax tree.

    On failure raises :class:`ParseErrors`, which lists one error per
    top-level declaration that failed to parse.
    """
    return Parser(tokens).parse_module()


def parse_source(source: str) -> SyntaxTree:
    return parse(tokenize(source))
