"""Path-sensitive header-validity checker.

Every command maps an input header type to an output header type. Reads and
writes of a field demand that its instance is valid in every alternative of
the input type. ``if (valid(h))`` splits the type; tables are checked under
per-action assumptions about which instances the control plane matched valid.

On a failed validity check the error is recorded and checking continues as if
the check had passed, so one root cause reports all of its symptom sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from hdrsafe import htypes
from hdrsafe.diagnostics import (
    ACTION, CONTROL, DEFAULT, PARSER, READS, Diagnostic, classify_all, not_valid_message,
)
from hdrsafe.htypes import ONE, ZERO, Inst, alt, cat, includes, is_empty, restrict_all
from hdrsafe.syntax import (
    BOOL, Add, Apply, Bits, Call, Emit, Extract, Field, If, IfValid, Lit, Modify, Num, Op,
    Remove, Seq, Skip, Var, flatten, format_expr, referenced_headers, type_of_value,
)


@dataclass
class Point:
    span: object
    label: str
    type: object


@dataclass
class CheckResult:
    output_type: object
    diagnostics: list
    point_types: list = field(default_factory=list)
    # table -> action -> instances assumed valid (union over apply sites)
    assumptions: dict = field(default_factory=dict)
    # table -> action -> instances whose validity check failed in the action
    action_failures: dict = field(default_factory=dict)
    # span -> join of the header types the site was checked under
    site_types: dict = field(default_factory=dict)

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self):
        return [d for d in self.diagnostics if not d.is_error]

    @property
    def ok(self):
        return not self.errors


@dataclass
class Assumption:
    assumed_valid: frozenset
    warnings: list


def maskable(t, e, kind):
    """A ternary key whose headers are all matched as valid can be wildcarded."""
    if kind == "exact":
        return False
    return referenced_headers(e) <= set(t.valids)


def describe(c):
    """Short label for a command, used for program points."""
    if isinstance(c, (Extract, Emit, Add, Remove)):
        return f"{type(c).__name__.lower()}({c.inst})"
    if isinstance(c, Apply):
        return f"apply({c.table})"
    if isinstance(c, Call):
        return f"{c.control}()"
    if isinstance(c, Modify):
        return f"{c.inst}.{c.name} = ..."
    if isinstance(c, If):
        return f"if ({format_expr(c.cond)})"
    if isinstance(c, IfValid):
        return f"if (valid({c.inst}))"
    return "skip"


def _extracts(c):
    for item in flatten(c.then) + flatten(c.other):
        if isinstance(item, Extract):
            return True
        if isinstance(item, (If, IfValid)) and _extracts(item):
            return True
    return False


class Checker:
    def __init__(self, program, cap=htypes.DEFAULT_CAP, record=True):
        self.p = program
        self.cap = cap
        self.record = record
        self.diags = []
        self._warned = set()
        self._reported = set()
        self._too_large = set()
        self.points = {}
        self.site_types = {}
        self.assumptions = {}
        self.action_failures = {}
        self.gaps = {}
        self.failed = set()  # instances whose validity checks failed
        self.where = (CONTROL, None, None)  # provenance, table, action

    # -- reporting
    def error(self, span, message, instance=None):
        prov, table, action = self.where
        # a site checked again from another call site is reported once
        key = (span, message, prov, table, action)
        if key in self._reported:
            return
        self._reported.add(key)
        gap = self.gaps.get(instance) if prov in (PARSER, CONTROL, READS, ACTION) else None
        self.diags.append(Diagnostic("error", self.p.filename, span, message, provenance=prov,
                                     instance=instance, table=table, action=action,
                                     default_gap=gap))

    def warn(self, span, message, instance=None):
        if (span, message) in self._warned:
            return
        self._warned.add((span, message))
        prov, table, action = self.where
        self.diags.append(Diagnostic("warning", self.p.filename, span, message, provenance=prov,
                                     instance=instance, table=table, action=action))

    def point(self, span, label, t):
        if not self.record or span is None:
            return
        key = (span, label)
        self.points[key] = alt(self.points[key], t) if key in self.points else t

    def compact(self, t, span):
        try:
            return htypes.compact(t, cap=self.cap)
        except htypes.DenotationTooLarge as exc:
            if span not in self._too_large:
                self._too_large.add(span)
                self.diags.append(Diagnostic(
                    "error", self.p.filename, span,
                    f"header type too large to analyze (more than {exc.cap} alternatives)",
                    provenance=self.where[0]))
            return htypes.normalize(t)

    def require_valid(self, theta, h, span):
        if self.record and span is not None:
            prev = self.site_types.get(span)
            self.site_types[span] = theta if prev is None else alt(prev, theta)
        if not includes(theta, h):
            self.failed.add(h)
            self.error(span, not_valid_message(h), instance=h)

    # -- expressions
    def expression(self, env, theta, e):
        """Type of ``e``; None when an error already made it unknown."""
        if isinstance(e, Lit):
            return type_of_value(e.value)
        if isinstance(e, Num):
            self.error(e.span, f"cannot infer the width of literal {e.value}")
            return None
        if isinstance(e, Field):
            self.require_valid(theta, e.inst, e.span)
            return self.p.field_type(e.inst, e.name)
        if isinstance(e, Var):
            if e.name not in env:
                self.error(e.span, f"unbound variable {e.name}")
                return None
            return env[e.name]
        if isinstance(e, Op):
            types = [self.expression(env, theta, a) for a in e.args]
            return self._op_type(e, types)
        raise TypeError(f"not an expression: {e!r}")

    def _op_type(self, e, types):
        op = e.op
        known = all(t is not None for t in types)

        def mismatch(expected):
            found = ", ".join(str(t) for t in types)
            self.error(e.span, f"operator {op} expects {expected}, found {found}")

        if op == "!":
            if known and types[0] != BOOL:
                mismatch("bool")
            return BOOL
        a, b = types
        if op in ("&&", "||"):
            if known and (a != BOOL or b != BOOL):
                mismatch("bool operands")
            return BOOL
        if op in ("==", "!="):
            if known and a != b:
                mismatch("operands of the same type")
            return BOOL
        if op in ("<", "<=", ">", ">="):
            if known and (a != b or not isinstance(a, Bits)):
                mismatch("bit operands of equal width")
            return BOOL
        if known and (a != b or not isinstance(a, Bits)):
            mismatch("bit operands of equal width")
            return a if isinstance(a, Bits) else b if isinstance(b, Bits) else None
        return a if a is not None else b

    # -- commands
    def command(self, env, theta, c):
        if is_empty(theta):
            return ZERO
        if isinstance(c, Skip):
            return theta
        if isinstance(c, Seq):
            return self.command(env, self.command(env, theta, c.first), c.second)
        if isinstance(c, (Extract, Add)):
            return cat(theta, Inst(c.inst))
        if isinstance(c, Emit):
            return theta
        if isinstance(c, Remove):
            return htypes.remove(theta, c.inst)
        if isinstance(c, Modify):
            self.require_valid(theta, c.inst, c.target_span)
            want = self.p.field_type(c.inst, c.name)
            got = self.expression(env, theta, c.expr)
            if got is not None and got != want:
                self.error(c.expr.span, f"type mismatch: {c.inst}.{c.name} has type {want}, found {got}")
            return theta
        if isinstance(c, If):
            saved = self.where
            if saved[0] == CONTROL and _extracts(c):
                # the condition of a transliterated select
                self.where = (PARSER, None, None)
            t = self.expression(env, theta, c.cond)
            self.where = saved
            if t is not None and t != BOOL:
                self.error(c.cond.span, f"type mismatch: condition has type {t}, expected bool")
            return self._branches(env, c, theta, theta)
        if isinstance(c, IfValid):
            return self._branches(env, c, htypes.restrict(theta, c.inst),
                                  htypes.neg_restrict(theta, c.inst))
        if isinstance(c, Apply):
            return self.table_apply(theta, self.p.table(c.table), c.span)
        if isinstance(c, Call):
            decl = self.p.control(c.control)
            self.point(decl.span, f"entry of control {c.control}", theta)
            return self.command(env, theta, decl.body)
        raise TypeError(f"not a command: {c!r}")

    def _branches(self, env, c, theta_then, theta_else):
        gaps = dict(self.gaps)
        out_then = self.command(env, theta_then, c.then)
        gaps_then, self.gaps = self.gaps, gaps
        out_else = self.command(env, theta_else, c.other)
        self.gaps = {**gaps_then, **self.gaps}
        out = self.compact(alt(out_then, out_else), c.span)
        self.point(c.span, "join of " + describe(c), out)
        return out

    # -- actions and tables
    def action(self, env, theta, decl):
        env = dict(env)
        env.update((q.name, q.type) for q in decl.params)
        return [q.type for q in decl.params], self.command(env, theta, decl.body)

    def control_validity(self, theta, t):
        """Per action, grow the set of instances assumed matched valid."""
        out = {}
        prov = self.where
        for a in t.actions:
            decl = self.p.action_lookup(a)
            assumed = set()
            order = []
            while True:
                scratch = Checker(self.p, self.cap, record=False)
                scratch.action({}, restrict_all(theta, assumed), decl)
                new = sorted((scratch.failed & set(t.valids)) - assumed)
                if not new:
                    break
                assumed.update(new)
                order.extend(new)
            warnings = []
            self.where = (ACTION, t.name, a)
            for h in order:
                msg = f"assuming {h} matched as valid for rules with action {a}"
                warnings.append(msg)
                self.warn(t.span_of(a), msg, instance=h)
            self.where = prov
            out[a] = Assumption(frozenset(assumed), warnings)
        return out

    def table_apply(self, theta, t, span=None):
        self.point(span, f"apply of table {t.name}", theta)
        saved = self.where
        # reads: non-maskable keys must be safe to evaluate
        self.where = (READS, t.name, None)
        for key in t.reads:
            if maskable(t, key.expr, key.kind):
                for h in sorted(referenced_headers(key.expr)):
                    if not includes(theta, h):
                        self.warn(key.span, f"assuming either {h} matched as valid or "
                                  f"{format_expr(key.expr)} wildcarded", instance=h)
            else:
                self.expression({}, theta, key.expr)
        self.where = saved
        assumptions = self.control_validity(theta, t)
        outs = []
        table_assumed = self.assumptions.setdefault(t.name, {})
        table_failed = self.action_failures.setdefault(t.name, {})
        for a in t.actions:
            assumed = assumptions[a].assumed_valid
            table_assumed[a] = table_assumed.get(a, frozenset()) | assumed
            self.where = (ACTION, t.name, a)
            before = set(self.failed)
            self.failed = set()
            _, out = self.action({}, restrict_all(theta, assumed), self.p.action_lookup(a))
            table_failed[a] = table_failed.get(a, set()) | self.failed
            self.failed |= before
            outs.append(out)
        if t.default is not None:
            # a miss runs the default whatever the valid bits, so no assumptions
            self.where = (DEFAULT, t.name, t.default.action)
            decl = self.p.action_lookup(t.default.action)
            for arg, q in zip(t.default.args, decl.params):
                got = self.expression({}, theta, arg)
                if got is not None and got != q.type:
                    self.error(arg.span, f"type mismatch: parameter {q.name} has type {q.type}, found {got}")
            _, out = self.action({}, theta, decl)
            outs.append(out)
        else:
            produced = [o for o in outs if not is_empty(o)]
            if produced:
                for h in sorted(set().union(*(htypes.instances(o) for o in produced))):
                    if all(includes(o, h) for o in produced) and not includes(theta, h):
                        self.gaps[h] = t.name
            outs.append(theta)
        self.where = saved
        return self.compact(htypes.total(outs), span)


# -- public entry points -----------------------------------------------------------

def _result(chk, out):
    return CheckResult(out, chk.diags,
                       [Point(s, label, htypes.normalize(t)) for (s, label), t in chk.points.items()],
                       chk.assumptions, chk.action_failures, chk.site_types)


def check_command(p, env, theta, c, cap=htypes.DEFAULT_CAP):
    chk = Checker(p, cap)
    out = chk.command(dict(env), theta, c)
    return _result(chk, htypes.normalize(out))


def check_expression(p, env, theta, e):
    """Return (type or None, diagnostics)."""
    chk = Checker(p)
    return chk.expression(dict(env), theta, e), chk.diags


def check_action(p, env, theta, decl):
    """Return (parameter types, output type, diagnostics)."""
    chk = Checker(p)
    params, out = chk.action(dict(env), theta, decl)
    return params, htypes.normalize(out), chk.diags


def infer_control_validity(p, theta, t):
    """Per-action Assumption (instances assumed valid, warnings)."""
    if isinstance(t, str):
        t = p.table(t)
    return Checker(p).control_validity(theta, t)


def check_table_apply(p, theta, t, cap=htypes.DEFAULT_CAP):
    """Check apply(t) under theta; ``t`` is a table or its name."""
    if isinstance(t, str):
        t = p.table(t)
    chk = Checker(p, cap)
    out = chk.table_apply(theta, t)
    return _result(chk, htypes.normalize(out))


def check_program(p, cap=htypes.DEFAULT_CAP):
    """Check the main body from the empty header state and classify errors."""
    chk = Checker(p, cap)
    theta = ONE
    for c in flatten(p.body):
        theta = chk.command({}, theta, c)
        chk.point(c.span, "after " + describe(c), theta)
    result = _result(chk, htypes.normalize(theta))
    if not result.point_types:
        result.point_types.append(Point(p.body.span, "after skip", ONE))
    result.point_types.sort(key=lambda pt: (pt.span.line, pt.span.col) if pt.span else (0, 0))
    result.diagnostics = classify_all(result.diagnostics, p, result)
    return result
