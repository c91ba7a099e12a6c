import io
import json

import pytest

from hdrsafe.cli import main


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_check_rejects_and_accepts(corpus):
    code, out, err = call("check", str(corpus / "hopcount_unsafe.sp4"))
    assert code == 1
    assert len(out.splitlines()) == 11
    assert err.strip() == "11 errors, 0 warnings"
    code, out, err = call("check", str(corpus / "hopcount_fixed.sp4"))
    assert (code, out) == (0, "")


def test_fail_on_warning(corpus):
    path = str(corpus / "vlan_mapping_fixed.sp4")
    assert call("check", path)[0] == 0
    assert call("check", "--fail-on-warning", path)[0] == 1


def test_structured(corpus):
    code, out, _ = call("check", "--structured", str(corpus / "fabric_unsafe.sp4"))
    doc = json.loads(out)
    assert code == 1
    assert {x["category"] for x in doc["diagnostics"]} == {"TableActionBug"}
    assert [b["key"] for b in doc["bugs"]] == ["fabric_ingress_dst_lkp"]


def test_check_with_entries(corpus, tmp_path):
    prog = str(corpus / "vlan_parser.sp4")
    assert call("check", prog, "--entries", str(corpus / "vlan_parser.entries"))[0] == 0
    bad = tmp_path / "bad.entries"
    bad.write_text("table forward: valids=01 keys=10.0.0.* -> remove()\n")
    code, out, _ = call("check", prog, "--entries", str(bad))
    assert code == 1 and "must be wildcarded" in out


def test_types(corpus):
    code, out, _ = call("types", "--denote", str(corpus / "vlan_parser.sp4"))
    assert code == 0
    lines = out.splitlines()
    i = next(k for k, line in enumerate(lines) if ": entry of control ingress: " in line)
    assert lines[i + 1].strip() == "{eth}, {eth, ipv4}, {eth, vlan}, {eth, ipv4, vlan}"
    assert lines[-1].endswith(": output: eth.vlan.ipv4+eth.ipv4+eth.vlan+eth")


def test_run(corpus):
    code, out, _ = call("run", str(corpus / "echo.sp4"), "--packet", "0x" + "ab" * 14 + "cd",
                        "--trace")
    assert code == 0
    assert "output: " + "ab" * 14 + " (112 bits)" in out
    assert "unparsed: cd (8 bits)" in out
    assert out.splitlines()[0].startswith("E-Extr")


def test_run_fault_exits_1(tmp_path):
    src = tmp_path / "bad.sp4"
    src.write_text("header t { f: 8 } instance a: t control { a.f = 1; }")
    code, _, err = call("run", str(src), "--packet", "00")
    assert code == 1 and "runtime fault" in err


def test_usage_errors(tmp_path):
    assert call("check", str(tmp_path / "missing.sp4"))[0] == 2
    src = tmp_path / "broken.sp4"
    src.write_text("control { extract(x); }")
    code, _, err = call("check", str(src))
    assert code == 2 and "unknown instance x" in err
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_max_denotation(tmp_path):
    decls = "".join(f"instance h{i}: t\n" for i in range(10))
    body = " ".join(f"if (a.f == {i}) {{ add(h{i}) }}" for i in range(10))
    src = tmp_path / "wide.sp4"
    src.write_text(f"header t {{ f: 8 }}\ninstance a: t\n{decls}control {{ extract(a); {body} }}\n")
    assert call("check", str(src))[0] == 0
    code, out, _ = call("check", "--max-denotation", "16", str(src))
    assert code == 1 and "too large" in out


def test_backend_flag(corpus):
    assert call("--backend", "python", "check", str(corpus / "echo.sp4"))[0] == 0


def test_native_backend_missing(corpus, monkeypatch):
    from hdrsafe import kernels

    monkeypatch.setattr(kernels, "NATIVE_AVAILABLE", False)
    code, _, err = call("--backend", "native", "check", str(corpus / "echo.sp4"))
    assert code == 2 and "not built" in err


def test_denote_listing_over_limit(corpus):
    code, _, err = call("types", "--denote", "--max-denotation", "2", str(corpus / "vlan_parser.sp4"))
    assert code == 2 and "raise --max-denotation" in err
