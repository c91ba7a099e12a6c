"""Acceptance gate: eight criteria, one PASS/FAIL line each.

Run under pytest (lines are printed even when output is captured) or
directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import sys
import time
from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

from hdrsafe import (  # noqa: E402
    BugCategory, InvalidAccess, check_program, htypes, load_entries, parse_file, parse_program,
    run, validate_well_behaved,
)
from hdrsafe.checker import check_command, check_table_apply  # noqa: E402
from hdrsafe.control import generate_entries, select_action  # noqa: E402
from hdrsafe.interp import BitStream, deserialize, init_value, serialize  # noqa: E402
from hdrsafe.syntax import HeaderDecl, Skip, referenced_headers  # noqa: E402
from oracles import (  # noqa: E402
    UNIVERSE, all_subsets, naive_denote, oracle_includes, oracle_neg_restrict,
    oracle_remove, oracle_restrict, random_set, random_type,
)
from programs import random_command_text, random_packet, random_program  # noqa: E402

CORPUS = HERE.parent / "src" / "hdrsafe" / "corpus"


def _load(name):
    return parse_file(CORPUS / f"{name}.sp4")


def S(*groups):
    return frozenset(frozenset(g) for g in groups)


# -- criteria: each returns (passed, detail) ----------------------------------------

def operator_equivalence(n=10_000, seed=1):
    rng = random.Random(seed)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(n):
        t = random_type(rng, 6)
        d = naive_denote(t)
        for h in UNIVERSE:
            ok = (htypes.denote(htypes.restrict(t, h)) == oracle_restrict(d, h)
                  and htypes.denote(htypes.neg_restrict(t, h)) == oracle_neg_restrict(d, h)
                  and htypes.denote(htypes.remove(t, h)) == oracle_remove(d, h)
                  and htypes.includes(t, h) == oracle_includes(d, h)
                  and htypes.is_empty(t) == (not d))
            mismatches += not ok
    elapsed = time.perf_counter() - start
    return mismatches == 0 and elapsed < 30, f"{n} types x {len(UNIVERSE)} instances, {mismatches} mismatches, {elapsed:.1f}s"


def entailment(n=10_000, seed=2):
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(n):
        t = random_type(rng, 6)
        d = naive_denote(t)
        # half the sets are drawn from the type itself so both answers occur
        s = rng.choice(sorted(d, key=sorted)) if d and rng.random() < 0.5 else random_set(rng)
        mismatches += htypes.entails(s, t) != (s in d)
    return mismatches == 0, f"{n} pairs, {mismatches} mismatches"


def _smaller(rng, big):
    r = rng.random()
    h = rng.choice(("a", "b", "c", "d"))
    if r < 0.3:
        return htypes.restrict(big, h)
    if r < 0.6:
        return htypes.neg_restrict(big, h)
    if r < 0.7:
        return big
    return htypes.ZERO if r < 0.75 else None


def monotonicity(n=1000, seed=3):
    rng = random.Random(seed)
    universe = ("a", "b", "c", "d")
    violations = 0
    for _ in range(n):
        p = parse_program(random_command_text(rng))
        big = random_type(rng, 4, universe)
        small = _smaller(rng, big)
        if small is None:
            small, big = big, htypes.alt(big, random_type(rng, 4, universe))
        assert htypes.subtype(small, big)
        out_small = check_command(p, {}, small, p.body).output_type
        out_big = check_command(p, {}, big, p.body).output_type
        violations += not htypes.subtype(out_small, out_big)
    return violations == 0, f"{n} commands, {violations} violations"


def reference_types():
    failures = []
    r = check_program(_load("vlan_parser"))
    entry = [pt.type for pt in r.point_types if pt.label == "entry of control ingress"]
    want = S(("eth",), ("eth", "vlan"), ("eth", "ipv4"), ("eth", "vlan", "ipv4"))
    if len(entry) != 1 or htypes.denote(entry[0]) != want:
        failures.append("parser ingress entry")
    r = check_program(_load("hopcount_fixed"))
    entry = [pt.type for pt in r.point_types if pt.label == "entry of control ingress"]
    if len(entry) != 1 or htypes.denote(entry[0]) != S(("ethernet", "ipv4", "tcp")):
        failures.append("hop-count ingress")
    theta = htypes.parse_type("ethernet.ipv4.udp.nc_hdr.nc_load + ethernet.ipv4")
    value = htypes.Inst("nc_value_1")
    plain = check_table_apply(_load("kvcache_default_unsafe"), theta, "add_value_header_1")
    fixed = check_table_apply(_load("kvcache_default_fixed"), theta, "add_value_header_1")
    if not htypes.equivalent(plain.output_type, htypes.alt(theta, htypes.cat(theta, value))):
        failures.append("wrapper table without default")
    if not htypes.equivalent(fixed.output_type, htypes.cat(theta, value)):
        failures.append("wrapper table with default")
    return not failures, "3 goldens" + (f", failed: {', '.join(failures)}" if failures else " match")


TAXONOMY = [
    ("hopcount_unsafe", "hopcount_fixed", BugCategory.PARSER),
    ("kvcache_control_unsafe", "kvcache_control_fixed", BugCategory.CONTROL),
    ("vlan_mapping_unsafe", "vlan_mapping_fixed", BugCategory.TABLE_READS),
    ("fabric_unsafe", "fabric_fixed", BugCategory.TABLE_ACTION),
    ("kvcache_default_unsafe", "kvcache_default_fixed", BugCategory.DEFAULT_ACTION),
]


def taxonomy():
    problems = []
    for buggy, fixed, category in TAXONOMY:
        rb, rf = check_program(_load(buggy)), check_program(_load(fixed))
        if not any(d.category is category for d in rb.errors):
            problems.append(f"{buggy} lacks {category}")
        if rf.errors:
            problems.append(f"{fixed} has {len(rf.errors)} errors")
    for fixed in ("vlan_mapping_fixed", "fabric_fixed"):
        if not any("matched as valid" in w.message for w in check_program(_load(fixed)).warnings):
            problems.append(f"{fixed} has no 'matched as valid' warning")
    counts = [len(check_program(_load(n)).errors)
              for n in ("hopcount_unsafe", "hopcount_ethfix", "hopcount_fixed")]
    if counts != [11, 5, 0]:
        problems.append(f"hop-count error counts {counts}")
    detail = f"5 pairs, hop-count errors {counts[0]}/{counts[1]}/{counts[2]}"
    return not problems, detail + (f"; {'; '.join(problems)}" if problems else "")


def soundness(programs=500, packets=20, seed=6):
    rng = random.Random(seed)
    start = time.perf_counter()
    accepted = faults = stuck = escaped = 0
    while accepted < programs:
        p = parse_program(random_program(rng))
        r = check_program(p)
        if not r.ok:
            continue
        accepted += 1
        for _ in range(packets):
            state = generate_entries(p, r.assumptions, rng)
            assert not validate_well_behaved(p, state, r.assumptions)
            try:
                cfg, _ = run(p, random_packet(rng), state)
            except InvalidAccess:
                faults += 1
                continue
            stuck += not isinstance(cfg.command, Skip)
            escaped += not htypes.entails(cfg.valid, r.output_type)
    elapsed = time.perf_counter() - start
    ok = faults == stuck == escaped == 0 and elapsed < 60
    return ok, (f"{programs} programs x {packets} packets, {faults} faults, {stuck} stuck, "
                f"{escaped} outside the static type, {elapsed:.1f}s")


def serialization(n=1000, seed=7):
    rng = random.Random(seed)
    bad = 0
    for _ in range(n):
        widths = [rng.randint(1, 48) for _ in range(rng.randint(1, 8))]
        decl = HeaderDecl("h", tuple((f"f{i}", w) for i, w in enumerate(widths)))
        total = sum(widths)
        length = total + rng.randint(0, 64)
        packet = BitStream(rng.getrandbits(length), length)
        record, rest = deserialize(decl, packet)
        bad += serialize(decl, record).bits() != packet.bits()[:total]
        bad += rest.bits() != packet.bits()[total:]
    return bad == 0, f"{n} pairs, {bad} mismatches"


def _apply_contexts(r, table):
    label = f"apply of table {table}"
    return [pt.type for pt in r.point_types if pt.label == label]


def well_behavedness(states=40, seed=8):
    """Brute force every valid-set of a table's instances against validated states.

    A key may be evaluated on an invalid header only if the checker reported
    an error for that key: for accepted programs, never.
    """
    rng = random.Random(seed)
    tables = faults = unexplained = 0
    for path in sorted(CORPUS.glob("*.sp4")):
        p = parse_file(path)
        r = check_program(p)
        error_spans = {d.span for d in r.errors}
        extra = []
        entries_file = path.with_suffix(".entries")
        if entries_file.exists():
            extra.append(load_entries(entries_file.read_text(), p))
        for t in p.tables.values():
            refs = set(t.valids).union(*(referenced_headers(k.expr) for k in t.reads))
            if len(refs) > 4:
                continue
            contexts = _apply_contexts(r, t.name)
            if not contexts:
                continue
            tables += 1
            reachable = {frozenset(s & refs) for ctx in contexts for s in htypes.denote(ctx).sets()}
            pool = extra + [generate_entries(p, r.assumptions, rng, max_entries=6)
                            for _ in range(states)]
            for state in pool:
                if validate_well_behaved(p, state, r.assumptions):
                    continue
                for valid in all_subsets(sorted(refs)):
                    if valid not in reachable:
                        continue
                    headers = {h: init_value(p.header_of(h)) for h in valid}
                    try:
                        select_action(p, t, headers, state)
                    except InvalidAccess as exc:
                        faults += 1
                        unexplained += exc.span not in error_spans
    return unexplained == 0, (f"{tables} tables, {faults} key faults, all on keys the checker "
                              f"rejected" if unexplained == 0 else f"{unexplained} unexplained faults")


CRITERIA = [
    (1, "operator equivalence", operator_equivalence),
    (2, "entailment is membership", entailment),
    (3, "monotonicity of command types", monotonicity),
    (4, "reference header types", reference_types),
    (5, "bug taxonomy corpus", taxonomy),
    (6, "soundness fuzz", soundness),
    (7, "serialization round trip", serialization),
    (8, "well-behaved control plane", well_behavedness),
]


def _line(number, name, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}: {detail}"


@pytest.mark.parametrize("number, name, fn", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(number, name, fn, capsys):
    passed, detail = fn()
    with capsys.disabled():
        print("\n" + _line(number, name, passed, detail))
    assert passed, detail


if __name__ == "__main__":
    results = []
    for number, name, fn in CRITERIA:
        passed, detail = fn()
        results.append(passed)
        print(_line(number, name, passed, detail), flush=True)
    sys.exit(0 if all(results) else 1)
