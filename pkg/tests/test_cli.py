import csv
import io

import pytest

from ccfbeta import example_path
from ccfbeta.cli import main

CASE = str(example_path("case_study.model"))
DEMO = str(example_path("two_of_three.model"))
PAIRS = str(example_path("symmetric_pairs.model"))

PAIR_MODEL = """
[component a]
class = X
attributes = site:s1
hardware = 1e-3 total
software = 1e-4 total

[component b]
class = X
attributes = site:s1
hardware = 1e-3 total
software = 1e-4 total

[group X ALL]
hardware.grades = {hw}
software.grades = {sw}
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, text, name="m.model"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestDerive:
    def test_case_study_bp_groups(self, capsys):
        code, out, _ = run(capsys, "derive", CASE)
        assert code == 0
        bp = [line for line in out.splitlines() if line.startswith("CCCG BP-")]
        assert len(bp) == 5
        assert "label=ALL size=8" in bp[0]
        assert all("label=DIVISION size=2" in line for line in bp[1:])
        assert "[derived]" in bp[0]

    def test_explicit_groups_marked(self, capsys):
        code, out, _ = run(capsys, "derive", DEMO)
        assert code == 0
        assert "CCCG ABC [user-specified]" in out

    def test_no_components(self, capsys, tmp_path):
        code, _, err = run(capsys, "derive", write(tmp_path, "[options]\nseed = 1\n"))
        assert code == 3
        assert "NO_COMPONENTS" in err

    def test_parse_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "derive", write(tmp_path, "[component a]\nclass X\n"))
        assert code == 2
        assert "parse error" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "derive", tmp_path / "absent.model")[0] == 2

    def test_lenient(self, capsys, tmp_path):
        text = PAIR_MODEL.format(hw="E " * 8, sw="E " * 8).replace("class = X", "class = X\nx = 1",
                                                                    1)
        path = write(tmp_path, text)
        assert run(capsys, "derive", path)[0] == 2
        code, _, err = run(capsys, "derive", "--lenient", path)
        assert code == 0 and "warning" in err


class TestBeta:
    def test_case_study_golden(self, capsys):
        code, out, _ = run(capsys, "beta", CASE, "--format", "csv")
        assert code == 0
        table = {(r["CCCG"], r["Domain"]): r for r in rows(out)}
        hw, sw = table["BP-ALL", "hardware"], table["BP-ALL", "software"]
        assert (hw["Sum"], hw["d"], hw["Beta"], hw["Exact"]) == ("2317", "51000", "0.045",
                                                                 "2317/51000")
        assert (sw["Sum"], sw["d"], sw["Beta"]) == ("42918", "100000", "0.429")
        assert table["BP-location=divA", "software"]["Source"] == "override"

    def test_all_e(self, capsys, tmp_path):
        path = write(tmp_path, PAIR_MODEL.format(hw="E " * 8, sw="E " * 8))
        code, out, _ = run(capsys, "beta", path, "--format", "csv")
        assert code == 0
        got = {(r["Domain"], r["Sum"], r["d"], r["Beta"]) for r in rows(out)}
        assert got == {("hardware", "51", "51000", "0.001"), ("software", "100", "100000", "0.001")}

    def test_blank_cell(self, capsys, tmp_path):
        hw = "redundancy=C separation=A+ understanding=C analysis=C mmi=C safety_culture=C " \
             "control=C tests=C"
        code, _, err = run(capsys, "beta", write(tmp_path, PAIR_MODEL.format(hw=hw, sw="E " * 8)))
        assert code == 3
        assert "MISSING_CELL" in err and "Separation" in err and "A+" in err

    def test_text_format(self, capsys):
        code, out, _ = run(capsys, "beta", CASE)
        assert code == 0 and "2317/51000" in out


def parse_sci(cell):
    return None if cell == "N/A" else float(cell)


class TestSolve:
    def test_case_study_text(self, capsys):
        code, out, err = run(capsys, "solve", CASE)
        assert code == 0
        assert "BP-Software" in out and "SENSITIVE" in out
        assert "note: BP-A1 (software)" in err

    def test_report_arithmetic(self, capsys):
        _, out, _ = run(capsys, "solve", CASE, "--format", "csv")
        table = rows(out)
        labels = [c for c in table[0] if c not in ("Component", "Total", "Flags")]
        for r in table:
            parts = [parse_sci(r[c]) for c in labels]
            assert sum(p for p in parts if p is not None) == \
                pytest.approx(float(r["Total"]), rel=1e-3), r["Component"]
            for c in labels + ["Total"]:
                assert r[c] == "N/A" or len(r[c].split("E")[0].replace(".", "")) == 4

    def test_per_component(self, capsys):
        _, out, _ = run(capsys, "solve", CASE, "--format", "csv", "--per-component")
        names = [r["Component"] for r in rows(out)]
        assert "BP-A1-Hardware" in names and "BP-A1-Software" in names
        assert len(names) == 8 * 2 + 16 * 2 + 16 + 8 + 12

    def test_single_component(self, capsys, tmp_path):
        text = "[component solo]\nclass = S\nattributes = site:x\nhardware = 3e-4 independent\n"
        _, out, _ = run(capsys, "solve", write(tmp_path, text), "--format", "csv")
        (row,) = rows(out)
        assert row["INDIVIDUAL"] == row["Total"] == "3.000E-04"

    def test_normalized_flag(self, capsys, tmp_path):
        path = write(tmp_path, _overlap_model(0.8, 0.4))
        code, out, _ = run(capsys, "solve", path, "--format", "csv")
        assert code == 0
        flagged = [r["Component"] for r in rows(out) if "NORMALIZED" in r["Flags"]]
        assert flagged == ["a-Hardware"]
        code, _, err = run(capsys, "solve", path, "--normalize", "none")
        assert code == 4 and "solver error" in err

    def test_weights_file(self, capsys, tmp_path):
        path = write(tmp_path, _overlap_model(0.8, 0.4))
        weights = write(tmp_path, "G1 = 0.5\nG2 = 0.5\n", "w.txt")
        code, out, _ = run(capsys, "solve", path, "--format", "csv", "--per-component",
                           "--normalize", f"weights:{weights}")
        assert code == 0
        (a,) = [r for r in rows(out) if r["Component"] == "a-Hardware"]
        assert float(a["INDIVIDUAL"]) == pytest.approx(1e-3 * 0.4, rel=1e-3)

    def test_bad_normalize(self, capsys):
        assert run(capsys, "solve", CASE, "--normalize", "sideways")[0] == 2

    def test_degenerate_independent(self, capsys, tmp_path):
        text = _overlap_model(0.6, 0.4).replace("1e-3 total", "1e-3 independent")
        assert run(capsys, "solve", write(tmp_path, text))[0] == 4


def _overlap_model(b1, b2):
    """Component a in two explicit groups, one with each partner."""
    comps = "".join(
        f"[component {c}]\nclass = X\nattributes = {attrs}\nhardware = 1e-3 total\n\n"
        for c, attrs in (("a", "k1:v, k2:v"), ("p", "k1:v, k2:p"), ("r", "k1:r, k2:v")))
    return comps + (f"[cccg G1]\nmembers = a p\nshared = k1:v\nhardware.beta = {b1}\n\n"
                    f"[cccg G2]\nmembers = a r\nshared = k2:v\nhardware.beta = {b2}\n")


class TestTree:
    def test_exact(self, capsys):
        code, out, _ = run(capsys, "tree", DEMO)
        assert code == 0
        assert out.strip() == "exact,7.660000e-02"

    def test_rare_not_below_exact(self, capsys, tmp_path):
        cuts = tmp_path / "cuts.txt"
        code, out, _ = run(capsys, "tree", DEMO, "--mode", "rare", "--cutsets", cuts)
        assert code == 0
        fields = out.strip().split(",")
        assert fields[0] == "rare" and float(fields[1]) >= 0.0766
        assert cuts.read_text() == "CCF.ABC.HW\nI.A.HW,I.B.HW\nI.A.HW,I.C.HW\nI.B.HW,I.C.HW\n"

    def test_mc_covers_exact(self, capsys):
        code, out, _ = run(capsys, "tree", DEMO, "--mode", "mc", "--reps", 200000, "--seed", 7)
        assert code == 0
        name, point, se, lo, hi, n, seed = out.strip().split(",")
        assert (name, n, seed) == ("system", "200000", "7")
        assert float(lo) <= 0.0766 <= float(hi)

    def test_mc_workers_and_backend_agree(self, capsys):
        base = ["tree", DEMO, "--mode", "mc", "--reps", 50000]
        outs = {run(capsys, *base, *extra)[1]
                for extra in ([], ["--workers", 3], ["--backend", "python"])}
        assert len(outs) == 1

    def test_symmetric_rare(self, capsys):
        code, out, _ = run(capsys, "tree", PAIRS)
        assert code == 0
        assert out.startswith("rare,1.100000e-01,") and out.strip().endswith("cut_sets=7")

    def test_unknown_component(self, capsys, tmp_path):
        text = DEMO_TEXT().replace("top = 2of3 A B C", "top = 2of3 A B Z")
        code, _, err = run(capsys, "tree", write(tmp_path, text))
        assert code == 3 and "TREE_UNKNOWN_COMPONENT" in err

    def test_no_tree(self, capsys):
        assert run(capsys, "tree", CASE)[0] == 3

    def test_too_large(self, capsys, tmp_path):
        comps = "".join(f"[component c{i}]\nclass = X\nattributes = id:c{i}\n"
                        f"hardware = 1e-3 total\n\n" for i in range(26))
        tree = "[tree]\nroot = top\ntop = or " + " ".join(f"c{i}" for i in range(26)) + "\n"
        code, _, err = run(capsys, "tree", write(tmp_path, comps + tree), "--mode", "exact")
        assert code == 4 and "--mode mc" in err
        assert run(capsys, "tree", write(tmp_path, comps + tree), "--mode", "mc",
                   "--reps", 1000)[0] == 0


def DEMO_TEXT():
    return open(DEMO).read()


class TestDiff:
    def test_identical(self, capsys):
        code, out, _ = run(capsys, "diff", CASE, CASE, "--format", "csv")
        assert code == 0
        betas, failures = out.split("\n\n")
        assert all(r["Delta"] in ("+0.00000", "-") for r in rows(betas))
        assert all(r["Flag"] == "" and r["Rel"] == "+0.00%" for r in rows(failures))

    def test_software_redundancy_to_e(self, capsys, tmp_path):
        text = open(CASE).read().replace("software.grades = redundancy=A ",
                                         "software.grades = redundancy=E ")
        variant = write(tmp_path, text)
        code, out, _ = run(capsys, "diff", CASE, variant, "--format", "csv")
        assert code == 0
        betas, failures = out.split("\n\n")
        bp_all = {r["Domain"]: r for r in rows(betas) if r["CCCG"] == "BP-ALL"}
        expected = (42918 - 23976 + 24) / 100000
        assert float(bp_all["software"]["Beta B"]) == pytest.approx(expected, abs=1e-5)
        assert bp_all["hardware"]["Delta"] == "+0.00000"
        changed = [r for r in rows(failures) if r["Flag"] == "CHANGED"]
        assert [(r["Row"], r["Domain"]) for r in changed] == [("BP (x8)", "software")]

    def test_component_sets_differ(self, capsys, tmp_path):
        text = open(DEMO).read()
        cut = text.replace("[component C]\nclass = CH\nattributes = procedure:p1\n"
                           "hardware = 0.1 independent\n", "")
        cut = cut.replace("members = A B C", "members = A B").replace("2of3 A B C", "and A B")
        variant = write(tmp_path, cut)
        assert run(capsys, "diff", DEMO, variant)[0] == 3
        code, out, err = run(capsys, "diff", DEMO, variant, "--loose")
        assert code == 0 and "intersection" in err

    def test_threshold(self, capsys, tmp_path):
        text = open(CASE).read().replace("software.grades = redundancy=A ",
                                         "software.grades = redundancy=E ")
        variant = write(tmp_path, text)
        _, out, _ = run(capsys, "diff", CASE, variant, "--threshold", "100")
        assert "0 row(s) changed" in out


class TestTables:
    def test_dump(self, capsys):
        code, out, _ = run(capsys, "tables")
        assert code == 0
        hw_block, sw_block = out.split("software beta estimation table")
        red = [line for line in hw_block.splitlines() if line.startswith("Redundancy")][0]
        assert red.split()[-7:] == ["1800", "882", "433", "212", "104", "25", "6"]
        assert "hardware beta estimation table, d = 51000" in out
        assert "d = 100000" in sw_block
        assert "0 < R <= 0.5" in out and "deviates from printed header" in out
