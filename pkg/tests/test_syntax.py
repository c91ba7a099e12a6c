import random

import pytest
from hypothesis import given, settings, strategies as st

from hdrsafe import ParseError, parse_program
from hdrsafe.parser import tokenize
from hdrsafe.syntax import (
    Apply, BitVec, Call, Extract, Field, IfValid, Lit, Modify, Op, Span, format_expr,
    pretty,
)
from programs import random_program

HDR = "header t { f: 8; g: 16 } instance a: t instance b: t\n"


def errors(src):
    with pytest.raises(ParseError) as info:
        parse_program(src)
    return [d.message for d in info.value.diagnostics]


def test_corpus_round_trips(corpus):
    files = sorted(corpus.glob("*.sp4"))
    assert len(files) >= 13
    for path in files:
        p = parse_program(path.read_text(), filename=path.name)
        assert parse_program(pretty(p), filename=path.name) == p, path.name


def test_ast_shape():
    p = parse_program(HDR + """
        control { extract(a); if (valid(a)) { a.f = a.f + 1 } else { apply(t2) } }
        table t2 { actions { nop; } }
        action nop() { skip; }
    """)
    first, second = p.body.first, p.body.second
    assert first == Extract("a")
    assert isinstance(second, IfValid) and second.inst == "a"
    assert second.then == Modify("a", "f", Op("+", (Field("a", "f"), Lit(BitVec(1, 8)))))
    assert second.other == Apply("t2")


def test_spans_are_one_based_inclusive():
    p = parse_program(HDR + "control {\n  extract(a);\n}\n")
    assert p.body.span == Span(3, 3, 3, 12)
    assert str(p.body.span) == "line 3, cols 3-12"


def test_semicolons_and_comments_are_optional():
    src = HDR + """
    // line comment
    /* block
       comment */
    control { extract(a) emit(a); ; }
    """
    p = parse_program(src)
    assert p.body.first == Extract("a")


def test_literal_widths_come_from_context():
    p = parse_program(HDR + """
        action set(v: 16) { a.g = v; }
        table tt { reads { a.f: exact; } actions { set; } default_action: set(7); }
        control { extract(a); a.f = 1 + 2; if (a.g == 0x10) { apply(tt); } }
    """)
    mod = p.body.second.first
    assert mod.expr == Op("+", (Lit(BitVec(1, 8)), Lit(BitVec(2, 8))))
    assert p.tables["tt"].default.args[0] == Lit(BitVec(7, 16))
    assert p.body.second.second.cond.args[1] == Lit(BitVec(16, 16))


def test_named_controls_are_called():
    p = parse_program(HDR + "control go { extract(a); } control { go(); go(); }")
    assert p.body.first == Call("go")
    assert p.control("go").body == Extract("a")


@pytest.mark.parametrize("src, needle", [
    (HDR + "control { c.f = 1:8; }", "unknown instance c"),
    (HDR + "control { a.h = 1:8; }", "unknown field h"),
    (HDR + "control { a.f = 300; }", "does not fit in 8 bits"),
    (HDR + "control { if (1 == 2) {} }", "cannot infer the width of literal 1"),
    (HDR + "control {} control {}", "duplicate main control"),
    (HDR + "control x {}", "missing main control"),
    (HDR + "action x() { extract(a); } control {}", "only add, remove"),
    (HDR + "control { foo(); }", "unknown control foo"),
    (HDR + "control c { c(); } control { c(); }", "recursive call of control c"),
    (HDR + "control { apply(nope); }", "unknown table nope"),
    (HDR + "table t { actions { nope; } } control {}", "unknown action nope"),
    (HDR + "action x(p: 8) {} table t { actions { x; } default_action: x(); } control {}",
     "takes 1 argument"),
    (HDR + "header t { z: 1 } control {}", "duplicate"),
    (HDR + "control { extract(a) ", "unterminated block"),
    (HDR + "control { $ }", "unexpected character"),
])
def test_resolution_errors(src, needle):
    msgs = errors(src)
    assert any(needle in m for m in msgs), msgs


def test_errors_are_collected_not_stopped_at_first():
    msgs = errors(HDR + "control { c.f = 1:8; d.f = 1:8; }")
    assert len(msgs) == 2


def test_tokenizer_sized_literals():
    kinds = [(t.kind, t.value) for t in tokenize("5:8 0x10 x")][:-1]
    assert kinds == [("sized", (5, 8)), ("int", 16), ("ident", None)]


@pytest.mark.parametrize("text", [
    "a.f + 1:8 - 2:8",
    "a.f - (1:8 + 2:8)",
    "!(a.f == 1:8) && a.g != 2:16 || true",
    "(a.f == 1:8 || false) && true",
])
def test_format_expr_round_trip(text):
    p = parse_program(HDR + f"control {{ extract(a); if ({text}) {{}} }}")
    cond = p.body.second.cond
    assert format_expr(cond) == text


@settings(max_examples=60)
@given(st.integers(0, 2**32))
def test_random_programs_round_trip(seed):
    p = parse_program(random_program(random.Random(seed)))
    assert parse_program(pretty(p)) == p
