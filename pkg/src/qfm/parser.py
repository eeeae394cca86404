"""Parser for the `.qfm` textual model format.

The format is line-oriented free text with `//` comments, UTF-8 encoded
(LF or CRLF). Identifiers are bare words (letters, digits, `_`, `-`, not
starting with a digit) or double-quoted strings for names with spaces or
other characters. Keywords are reserved; quote a name to use a keyword as
an identifier.

Canonical shape of a model file::

    model <name> {
      <feature tree>          // exactly one root feature declaration
      <quality declarations>
      <cross-tree constraints>
      <requirement>           // optional
    }

Parsing recovers from errors to report as many diagnostics per file as
possible; `parse_model` returns either a resolved FeatureModel or the list
of diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import builder
from .diagnostics import Diagnostic, SourceSpan, error
from .model import Comparator, ConstraintPolarity, FeatureModel, GroupKind, Level, Nature, QualityKind

KEYWORDS = frozenset({
    "model", "feature", "abstract", "mandatory", "hidden",
    "attribute", "in", "group", "or", "alt",
    "requires", "excludes",
    "quality", "qualitative", "quantitative", "variant",
    "implemented_by", "involves", "influenced_by",
    "level", "low", "medium", "high", "metric",
    "requirement", "set", "require", "threshold",
    "fairness", "interpretability", "privacy",
    "prediction_correctness", "computational_complexity",
})

_KIND_KEYWORDS = {
    "fairness": QualityKind.FAIRNESS,
    "interpretability": QualityKind.INTERPRETABILITY,
    "privacy": QualityKind.PRIVACY,
    "prediction_correctness": QualityKind.PREDICTION_CORRECTNESS,
    "computational_complexity": QualityKind.COMPUTATIONAL_COMPLEXITY,
}

_LEVEL_KEYWORDS = {"low": Level.LOW, "medium": Level.MEDIUM, "high": Level.HIGH}

_COMPARATORS = {"<=": Comparator.LE, ">=": Comparator.GE,
                "<": Comparator.LT, ">": Comparator.GT, "=": Comparator.EQ}

#: tokens that begin a declaration; used to resynchronize after an error
_SYNC_KEYWORDS = frozenset({
    "feature", "abstract", "mandatory", "hidden", "attribute", "group",
    "quality", "metric", "requirement", "set", "require", "threshold",
    "implemented_by", "involves", "influenced_by",
})

_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | frozenset("0123456789-")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "number", "kw", "eof" or the punctuation itself
    text: str
    span: SourceSpan


class _Lexer:
    def __init__(self, text: str, file: str):
        self.text = text
        self.file = file
        self.pos = 0
        self.line = 1
        self.col = 1
        self.diags: list[Diagnostic] = []

    def span(self, line: int, col: int, length: int) -> SourceSpan:
        return SourceSpan(self.file, line, col, length)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == "/" and text.startswith("//", self.pos):
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            line, col = self.line, self.col
            if ch == '"':
                out.append(self._string(line, col))
                continue
            if ch in _IDENT_START:
                start = self.pos
                while self.pos < len(text) and text[self.pos] in _IDENT_CONT:
                    self._advance()
                word = text[start:self.pos]
                kind = "kw" if word in KEYWORDS else "ident"
                out.append(Token(kind, word, self.span(line, col, len(word))))
                continue
            if ch.isdigit() or (ch == "-" and self.pos + 1 < len(text) and text[self.pos + 1].isdigit()):
                out.append(self._number(line, col))
                continue
            if text.startswith("<=", self.pos) or text.startswith(">=", self.pos):
                tok = text[self.pos:self.pos + 2]
                self._advance(2)
                out.append(Token(tok, tok, self.span(line, col, 2)))
                continue
            if ch in "{}.,=<>":
                self._advance()
                out.append(Token(ch, ch, self.span(line, col, 1)))
                continue
            self.diags.append(error("E005", f"unexpected character {ch!r}", self.span(line, col, 1)))
            self._advance()
        out.append(Token("eof", "", self.span(self.line, self.col, 0)))
        return out

    def _string(self, line: int, col: int) -> Token:
        text = self.text
        start = self.pos
        self._advance()  # opening quote
        chars: list[str] = []
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == '"':
                self._advance()
                return Token("ident", "".join(chars), self.span(line, col, self.pos - start))
            if ch == "\n":
                break
            if ch == "\\" and self.pos + 1 < len(text) and text[self.pos + 1] in '"\\':
                self._advance()
                ch = text[self.pos]
            chars.append(ch)
            self._advance()
        self.diags.append(error("E003", "unterminated string literal", self.span(line, col, 1)))
        return Token("ident", "".join(chars), self.span(line, col, 1))

    def _number(self, line: int, col: int) -> Token:
        text = self.text
        start = self.pos
        if text[self.pos] == "-":
            self._advance()
        while self.pos < len(text) and text[self.pos].isdigit():
            self._advance()
        if self.pos < len(text) and text[self.pos] == ".":
            if self.pos + 1 < len(text) and text[self.pos + 1].isdigit():
                self._advance()
                while self.pos < len(text) and text[self.pos].isdigit():
                    self._advance()
        word = text[start:self.pos]
        return Token("number", word, self.span(line, col, len(word)))


class _Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.tokens = tokens
        self.file = file
        self.idx = 0
        self.diags: list[Diagnostic] = []

    # -- token plumbing -----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.idx]

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.cur
        return tok.kind == kind and (text is None or tok.text == text)

    def at_kw(self, *words: str) -> bool:
        return self.cur.kind == "kw" and self.cur.text in words

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "eof":
            self.idx += 1
        return tok

    def err(self, code: str, message: str, span: SourceSpan | None = None) -> None:
        self.diags.append(error(code, message, span or self.cur.span))

    def _describe(self, tok: Token) -> str:
        if tok.kind == "eof":
            return "end of file"
        return f"`{tok.text}`"

    def expect_kw(self, word: str) -> Token | None:
        if self.at_kw(word):
            return self.advance()
        self.err("E001", f"expected `{word}`, found {self._describe(self.cur)}")
        return None

    def expect(self, kind: str, what: str) -> Token | None:
        if self.cur.kind == kind:
            return self.advance()
        self.err("E001", f"expected {what}, found {self._describe(self.cur)}")
        return None

    def expect_ident(self, what: str = "identifier") -> builder.Name | None:
        if self.cur.kind == "ident":
            tok = self.advance()
            return builder.Name(tok.text, tok.span)
        self.err("E001", f"expected {what}, found {self._describe(self.cur)}")
        return None

    def skip_to_sync(self) -> None:
        """Skip tokens until a declaration keyword or block edge, balancing braces."""
        depth = 0
        while self.cur.kind != "eof":
            tok = self.cur
            if depth == 0 and (tok.kind == "}" or (tok.kind == "kw" and tok.text in _SYNC_KEYWORDS)):
                return
            if tok.kind == "{":
                depth += 1
            elif tok.kind == "}":
                depth -= 1
            self.advance()

    # -- grammar ------------------------------------------------------------

    def parse_model(self) -> builder.ModelDecl | None:
        if self.expect_kw("model") is None:
            return None
        name = self.expect_ident("model name")
        if name is None or self.expect("{", "`{`") is None:
            return None

        root: builder.FeatureDecl | None = None
        qualities: list[builder.QualityDecl] = []
        constraints: list[builder.ConstraintDecl] = []
        requirement: builder.RequirementDecl | None = None

        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("feature", "abstract", "mandatory", "hidden"):
                decl = self.parse_feature()
                if decl is None:
                    self.skip_to_sync()
                elif root is None:
                    root = decl
                else:
                    self.err("E002", f"only one root feature is allowed, found second root "
                                     f"{decl.name.text!r}", decl.name.span)
            elif self.at_kw("quality"):
                decl = self.parse_quality()
                if decl is None:
                    self.skip_to_sync()
                else:
                    qualities.append(decl)
            elif self.at_kw("requirement"):
                decl = self.parse_requirement()
                if decl is None:
                    self.skip_to_sync()
                elif requirement is None:
                    requirement = decl
                else:
                    self.err("E002", "only one requirement block is allowed", decl.task.span)
            elif self.cur.kind == "ident":
                decl = self.parse_constraint()
                if decl is None:
                    self.skip_to_sync()
                else:
                    constraints.append(decl)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in model body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        if root is None:
            self.err("E001", "model declares no root feature", name.span)
            return None
        return builder.ModelDecl(name=name, root=root, qualities=qualities,
                                 constraints=constraints, requirement=requirement,
                                 span=name.span)

    def parse_feature(self) -> builder.FeatureDecl | None:
        flags = {"abstract": False, "mandatory": False, "hidden": False}
        while self.at_kw("abstract", "mandatory", "hidden"):
            flags[self.advance().text] = True
        if self.expect_kw("feature") is None:
            return None
        name = self.expect_ident("feature name")
        if name is None:
            return None
        decl = builder.FeatureDecl(
            name=name, is_abstract=flags["abstract"],
            is_mandatory=flags["mandatory"], is_hidden=flags["hidden"])
        if not self.at("{"):
            return decl
        self.advance()
        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("attribute"):
                attr = self.parse_attribute()
                if attr is None:
                    self.skip_to_sync()
                else:
                    decl.attributes.append(attr)
            elif self.at_kw("group"):
                group = self.parse_group()
                if group is None:
                    self.skip_to_sync()
                else:
                    decl.groups.append(group)
            elif self.at_kw("feature", "abstract", "mandatory", "hidden"):
                child = self.parse_feature()
                if child is None:
                    self.skip_to_sync()
                else:
                    decl.plain_children.append(child)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in feature body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        return decl

    def parse_attribute(self) -> builder.AttrDecl | None:
        self.advance()  # attribute
        name = self.expect_ident("attribute name")
        if name is None or self.expect_kw("in") is None or self.expect("{", "`{`") is None:
            return None
        values: list[builder.Name] = []
        first = self.expect_ident("attribute value")
        if first is None:
            return None
        values.append(first)
        while self.at(","):
            self.advance()
            v = self.expect_ident("attribute value")
            if v is None:
                return None
            values.append(v)
        if self.expect("}", "`}`") is None:
            return None
        return builder.AttrDecl(name=name, values=values)

    def parse_group(self) -> builder.GroupDecl | None:
        start = self.advance()  # group
        if self.at_kw("or"):
            kind = GroupKind.OR
        elif self.at_kw("alt"):
            kind = GroupKind.ALT
        else:
            self.err("E001", f"expected `or` or `alt`, found {self._describe(self.cur)}")
            return None
        self.advance()
        if self.expect("{", "`{`") is None:
            return None
        members: list[builder.FeatureDecl] = []
        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("feature", "abstract", "mandatory", "hidden"):
                member = self.parse_feature()
                if member is None:
                    self.skip_to_sync()
                else:
                    members.append(member)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in group body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        if not members:
            self.err("E001", "group declares no member features", start.span)
            return None
        return builder.GroupDecl(kind=kind, members=members, span=start.span)

    def parse_constraint(self) -> builder.ConstraintDecl | None:
        subject = self.expect_ident("feature name")
        if subject is None:
            return None
        if self.at_kw("requires"):
            polarity = ConstraintPolarity.REQUIRE
        elif self.at_kw("excludes"):
            polarity = ConstraintPolarity.EXCLUDE
        else:
            self.err("E001", f"expected `requires` or `excludes`, found {self._describe(self.cur)}")
            return None
        self.advance()
        ref = self.parse_ref()
        if ref is None:
            return None
        return builder.ConstraintDecl(subject=subject, polarity=polarity, object=ref)

    def parse_ref(self) -> builder.RefDecl | None:
        feature = self.expect_ident("reference")
        if feature is None:
            return None
        attribute = None
        value = None
        if self.at("."):
            self.advance()
            attribute = self.expect_ident("attribute name")
            if attribute is None:
                return None
            if self.at("="):
                self.advance()
                value = self.expect_ident("attribute value")
                if value is None:
                    return None
        return builder.RefDecl(feature=feature, attribute=attribute, value=value)

    def parse_quality(self) -> builder.QualityDecl | None:
        self.advance()  # quality
        if self.cur.kind == "kw" and self.cur.text in _KIND_KEYWORDS:
            kind = _KIND_KEYWORDS[self.advance().text]
        else:
            expected = ", ".join(sorted(_KIND_KEYWORDS))
            self.err("E002", f"expected a quality kind ({expected}), "
                             f"found {self._describe(self.cur)}")
            return None
        name = self.expect_ident("quality name")
        if name is None:
            return None
        decl = builder.QualityDecl(kind=kind, name=name)
        if self.at_kw("qualitative"):
            decl.nature = Nature.QUALITATIVE
            self.advance()
        elif self.at_kw("quantitative"):
            decl.nature = Nature.QUANTITATIVE
            self.advance()
        if self.at_kw("variant"):
            self.advance()
            tag = self.expect_ident("variant tag")
            if tag is None:
                return None
            decl.variant_tag = tag.text
        if self.expect("{", "`{`") is None:
            return None
        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("implemented_by"):
                self.advance()
                names = self.parse_ident_list()
                if names is None:
                    self.skip_to_sync()
                else:
                    decl.implemented_by.extend(names)
            elif self.at_kw("involves"):
                self.advance()
                involved = self.parse_involvements()
                if involved is None:
                    self.skip_to_sync()
                else:
                    decl.involvements.extend(involved)
            elif self.at_kw("influenced_by"):
                self.advance()
                names = self.parse_ident_list()
                if names is None:
                    self.skip_to_sync()
                else:
                    decl.influenced_by.extend(names)
            elif self.at_kw("metric"):
                metric = self.parse_metric()
                if metric is None:
                    self.skip_to_sync()
                else:
                    decl.metrics.append(metric)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in quality body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        return decl

    def parse_ident_list(self) -> list[builder.Name] | None:
        first = self.expect_ident()
        if first is None:
            return None
        names = [first]
        while self.at(","):
            self.advance()
            nxt = self.expect_ident()
            if nxt is None:
                return None
            names.append(nxt)
        return names

    def parse_involvements(self) -> list[builder.InvolvementDecl] | None:
        out: list[builder.InvolvementDecl] = []
        while True:
            feature = self.expect_ident("feature name")
            if feature is None:
                return None
            level = None
            if self.at_kw("level"):
                self.advance()
                level = self.parse_level()
                if level is None:
                    return None
            out.append(builder.InvolvementDecl(feature=feature, level=level))
            if not self.at(","):
                return out
            self.advance()

    def parse_level(self) -> Level | None:
        if self.cur.kind == "kw" and self.cur.text in _LEVEL_KEYWORDS:
            return _LEVEL_KEYWORDS[self.advance().text]
        self.err("E001", f"expected `low`, `medium` or `high`, found {self._describe(self.cur)}")
        return None

    def parse_metric(self) -> builder.MetricDecl | None:
        self.advance()  # metric
        name = self.expect_ident("metric name")
        if name is None or self.expect_kw("implemented_by") is None:
            return None
        implementer = self.expect_ident("feature name")
        if implementer is None:
            return None
        return builder.MetricDecl(name=name, implementer=implementer)

    def parse_requirement(self) -> builder.RequirementDecl | None:
        self.advance()  # requirement
        task = self.expect_ident("task name")
        if task is None or self.expect("{", "`{`") is None:
            return None
        decl = builder.RequirementDecl(task=task)
        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("set"):
                spec = self.parse_set()
                if spec is None:
                    self.skip_to_sync()
                else:
                    decl.attribute_specs.append(spec)
            elif self.at_kw("require"):
                qreq = self.parse_quality_req()
                if qreq is None:
                    self.skip_to_sync()
                else:
                    decl.quality_reqs.append(qreq)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in requirement body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        return decl

    def parse_set(self) -> builder.SetDecl | None:
        self.advance()  # set
        feature = self.expect_ident("feature name")
        if feature is None or self.expect(".", "`.`") is None:
            return None
        attribute = self.expect_ident("attribute name")
        if attribute is None or self.expect("=", "`=`") is None:
            return None
        value = self.expect_ident("attribute value")
        if value is None:
            return None
        return builder.SetDecl(feature=feature, attribute=attribute, value=value)

    def parse_quality_req(self) -> builder.QualityReqDecl | None:
        self.advance()  # require
        prop = self.expect_ident("quality name")
        if prop is None:
            return None
        decl = builder.QualityReqDecl(property=prop)
        if not self.at("{"):
            return decl
        self.advance()
        while not self.at("}") and self.cur.kind != "eof":
            if self.at_kw("level"):
                self.advance()
                level = self.parse_level()
                if level is None:
                    self.skip_to_sync()
                else:
                    decl.required_level = level
            elif self.at_kw("threshold"):
                threshold = self.parse_threshold()
                if threshold is None:
                    self.skip_to_sync()
                else:
                    decl.thresholds.append(threshold)
            else:
                self.err("E002", f"unexpected {self._describe(self.cur)} in require body")
                self.advance()
                self.skip_to_sync()
        self.expect("}", "`}`")
        return decl

    def parse_threshold(self) -> builder.ThresholdDecl | None:
        self.advance()  # threshold
        metric = self.expect_ident("metric name")
        if metric is None:
            return None
        if self.cur.kind in _COMPARATORS:
            comparator = _COMPARATORS[self.advance().kind]
        else:
            self.err("E001", f"expected a comparator (<=, >=, <, >, =), "
                             f"found {self._describe(self.cur)}")
            return None
        number = self.expect("number", "a number")
        if number is None:
            return None
        try:
            value = float(number.text)
        except ValueError:
            self.err("E004", f"malformed number {number.text!r}", number.span)
            return None
        return builder.ThresholdDecl(metric=metric, comparator=comparator, value=value)


def parse_declarations(text: str, file: str = "<input>") -> tuple[builder.ModelDecl | None, list[Diagnostic]]:
    """Lex and parse to raw declarations without resolving references."""
    text = text.removeprefix("﻿")  # tolerate a UTF-8 BOM
    lexer = _Lexer(text, file)
    tokens = lexer.tokens()
    parser = _Parser(tokens, file)
    decl = parser.parse_model()
    if parser.cur.kind != "eof":
        parser.err("E001", f"expected end of file, found {parser._describe(parser.cur)}")
    return decl, lexer.diags + parser.diags


def parse_model(text: str, file: str = "<input>") -> FeatureModel | list[Diagnostic]:
    """Parse and resolve a model; returns the model or all error diagnostics."""
    decl, diags = parse_declarations(text, file)
    if diags or decl is None:
        if not diags:
            diags = [error("E001", "expected `model`", SourceSpan(file, 1, 1, 0))]
        return diags
    model, errors = builder.resolve_model(decl)
    if errors:
        return [error(e.code, e.message, e.span) for e in errors]
    assert model is not None
    return model


def parse_requirement_block(text: str, file: str, model: FeatureModel):
    """Parse a standalone `requirement` block and resolve it against a model.

    Returns (requirement, diagnostics); the requirement is None when the
    text does not parse or resolve cleanly.
    """
    text = text.removeprefix("﻿")
    lexer = _Lexer(text, file)
    tokens = lexer.tokens()
    parser = _Parser(tokens, file)
    if not parser.at_kw("requirement"):
        parser.err("E001", f"expected `requirement`, found {parser._describe(parser.cur)}")
        return None, lexer.diags + parser.diags
    decl = parser.parse_requirement()
    diags = lexer.diags + parser.diags
    if diags or decl is None:
        return None, diags
    requirement, errors = builder.resolve_requirement(decl, model)
    if errors:
        return None, [error(e.code, e.message, e.span) for e in errors]
    return requirement, []
