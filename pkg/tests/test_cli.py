import json

import pytest

from monoidkit.cli import main

BICYCLIC = "letters: a b\nrel: a b = 1\n"
GRID = "letters: a b\nrel: b a = a b\n"
AMALGAM_SPEC = {
    "kind": "amalgam",
    "m1": {"letters": ["x"]},
    "m2": {"letters": ["y"]},
    "w": {"letters": ["w"]},
    "f1": {"w": "x x"},
    "f2": {"w": "y y y"},
}
OP_SPEC = {
    "kind": "otto-pride",
    "m": {"letters": ["a"]},
    "a_gens": ["a a"],
    "phi": {"a a": "a"},
    "free_basis": ["1", "a"],
    "stable_letter": "t",
}


@pytest.fixture
def bicyclic_file(tmp_path):
    f = tmp_path / "bicyclic.txt"
    f.write_text(BICYCLIC)
    return str(f)


@pytest.fixture
def grid_file(tmp_path):
    f = tmp_path / "grid.txt"
    f.write_text(GRID)
    return str(f)


@pytest.fixture
def amalgam_spec_file(tmp_path):
    f = tmp_path / "amalgam.json"
    f.write_text(json.dumps(AMALGAM_SPEC))
    return str(f)


@pytest.fixture
def op_spec_file(tmp_path):
    f = tmp_path / "op.json"
    f.write_text(json.dumps(OP_SPEC))
    return str(f)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_parse(capsys, bicyclic_file):
    code, data = run_json(capsys, "parse", "--presentation", bicyclic_file)
    assert code == 0
    assert data["special"] and data["relators"] == ["a b"]
    assert data["presentation"]["letters"] == ["a", "b"]


def test_missing_file_is_input_error(capsys):
    code, out = run(capsys, "parse", "--presentation", "/no/such/file")
    assert code == 2


def test_syntax_error_is_input_error(capsys, tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("nonsense\n")
    code, _ = run(capsys, "parse", "--presentation", str(f))
    assert code == 2


def test_complete(capsys, bicyclic_file):
    code, data = run_json(capsys, "complete", "--presentation", bicyclic_file)
    assert code == 0
    assert data["completed"]
    assert data["rules"] == [{"lhs": "a b", "rhs": "1"}]


def test_complete_budget_exhaustion(capsys, tmp_path):
    f = tmp_path / "hard.txt"
    f.write_text("letters: x y\nrel: x x = y y y\n")
    code, data = run_json(capsys, "complete", "--presentation", str(f),
                          "--budget", "1")
    assert code == 3
    assert not data["completed"]


def test_rewrite(capsys, bicyclic_file):
    code, data = run_json(capsys, "rewrite", "--system", bicyclic_file,
                          "--word", "a a b b")
    assert code == 0
    assert data["normal_form"] == "1"
    assert data["trace"] == ["a a b b", "a b", "1"]


def test_rewrite_budget_exhaustion(capsys, bicyclic_file):
    code, data = run_json(capsys, "rewrite", "--system", bicyclic_file,
                          "--word", "a a b b", "--budget", "1")
    assert code == 3
    assert "partial" in data


def test_equal_verdicts(capsys, bicyclic_file):
    code, data = run_json(capsys, "equal", "--presentation", bicyclic_file,
                          "--u", "a a b b", "--v", "1")
    assert code == 0 and data["verdict"] == "proven"
    code, data = run_json(capsys, "equal", "--presentation", bicyclic_file,
                          "--u", "a", "--v", "b")
    assert code == 1 and data["verdict"] == "refuted"


def test_equal_unknown_surfaced(capsys, tmp_path):
    f = tmp_path / "hard.txt"
    f.write_text("letters: x y\nrel: x x = y y y\n")
    code, data = run_json(capsys, "equal", "--presentation", str(f),
                          "--u", "x y x", "--v", "y x y", "--budget", "5")
    assert code == 3
    assert data["verdict"] == "unknown"
    assert data["unknowns"][0]["verdict"] == "unknown"


def test_analyze_special(capsys, bicyclic_file):
    code, data = run_json(capsys, "analyze-special",
                          "--presentation", bicyclic_file)
    assert code == 0
    assert data["delta"] == ["a b"]
    assert data["units"]["relations"] == [{"lhs": ["b1"], "rhs": []}]
    assert data["right_units"]["zmap"] == {"z1": "a"}
    assert data["certified"]
    assert data["torsion"] == {"k": 1, "torsion": False}


def test_analyze_special_emit_filter(capsys, bicyclic_file):
    code, data = run_json(capsys, "analyze-special",
                          "--presentation", bicyclic_file, "--emit", "delta")
    assert code == 0
    assert set(data) == {"delta", "partition", "diagnostics", "certified"}


def test_analyze_special_rejects_non_special(capsys, grid_file):
    code, _ = run(capsys, "analyze-special", "--presentation", grid_file)
    assert code == 2


def test_cayley_json_and_dot(capsys, bicyclic_file):
    code, data = run_json(capsys, "cayley", "--presentation", bicyclic_file,
                          "--radius", "2")
    assert code == 0
    assert len(data["vertices"]) == 6
    code, out = run(capsys, "cayley", "--presentation", bicyclic_file,
                    "--radius", "2", "--format", "dot")
    assert code == 0 and out.startswith("digraph")


def test_condense(capsys, bicyclic_file):
    code, data = run_json(capsys, "condense", "--presentation", bicyclic_file,
                          "--radius", "6")
    assert code == 0
    assert data["is_tree"] == "proven"


def test_check_tree_pass(capsys, bicyclic_file):
    code, data = run_json(capsys, "check-tree",
                          "--presentation", bicyclic_file, "--radius", "8")
    assert code == 0
    assert data["is_tree"]["verdict"] == "proven"
    assert data["entrance_violations"] == []
    assert data["condensation_matches_hasse"]


def test_check_tree_grid_fails(capsys, grid_file):
    code, data = run_json(capsys, "check-tree", "--presentation", grid_file,
                          "--radius", "4", "--margin", "0")
    assert code == 1
    assert data["is_tree"]["verdict"] == "refuted"
    assert data["entrance_violations"]


def test_construct_amalgam(capsys, amalgam_spec_file):
    code, data = run_json(capsys, "construct", "--kind", "amalgam",
                          "--spec", amalgam_spec_file)
    assert code == 0
    assert data["presentation"]["letters"] == ["x", "y"]
    assert data["presentation"]["relations"] == [
        {"lhs": ["x", "x"], "rhs": ["y", "y", "y"]}]


def test_construct_otto_pride(capsys, op_spec_file):
    code, data = run_json(capsys, "construct", "--kind", "otto-pride",
                          "--spec", op_spec_file)
    assert code == 0
    assert data["presentation"]["letters"] == ["a", "t"]


def test_construct_kind_mismatch(capsys, amalgam_spec_file):
    code, _ = run(capsys, "construct", "--kind", "hnn",
                  "--spec", amalgam_spec_file)
    assert code == 2


def test_bass_serre_json(capsys, amalgam_spec_file):
    code, data = run_json(capsys, "bass-serre", "--kind", "amalgam",
                          "--spec", amalgam_spec_file, "--radius", "4")
    assert code == 0
    assert data["forest_by_search"] and data["forest_by_rank"]


def test_bass_serre_matrix(capsys, op_spec_file):
    code, out = run(capsys, "bass-serre", "--kind", "otto-pride",
                    "--spec", op_spec_file, "--radius", "4",
                    "--format", "matrix")
    assert code == 0
    header = out.splitlines()[0].split()
    assert len(header) == 3


def test_chain(capsys, bicyclic_file):
    code, data = run_json(capsys, "chain", "--presentation", bicyclic_file,
                          "--radius", "3")
    assert code == 0
    assert data["composite_zero"]


def test_homology(capsys, bicyclic_file):
    code, data = run_json(capsys, "homology", "--presentation", bicyclic_file,
                          "--radius", "6")
    assert code == 0
    assert data["exactness"]["total_defect"] == 0
    assert [h["betti"] for h in data["homology"]] == [1, 0, 0]


def test_verify_derivations(capsys, op_spec_file):
    code, data = run_json(capsys, "verify-derivations", "--kind", "otto-pride",
                          "--spec", op_spec_file, "--radius", "5",
                          "--samples", "100")
    assert code == 0
    assert data["derivation"]["passed"] and data["beta"]["passed"]


def test_verify_derivations_forest(capsys, op_spec_file):
    code, data = run_json(capsys, "verify-derivations", "--kind", "otto-pride",
                          "--spec", op_spec_file, "--radius", "4",
                          "--forest", "--margin", "2", "--samples", "100")
    assert code == 0
    assert data["beta"]["checked"] >= 5


def test_outputs_byte_identical(tmp_path, bicyclic_file, amalgam_spec_file):
    pairs = []
    for i in (1, 2):
        out = tmp_path / f"ball{i}.json"
        assert main(["cayley", "--presentation", bicyclic_file,
                     "--radius", "5", "--out", str(out)]) == 0
        tree = tmp_path / f"tree{i}.json"
        assert main(["check-tree", "--presentation", bicyclic_file,
                     "--radius", "8", "--out", str(tree)]) == 0
        bs = tmp_path / f"bs{i}.dot"
        assert main(["bass-serre", "--kind", "amalgam", "--spec",
                     amalgam_spec_file, "--radius", "4", "--format", "dot",
                     "--out", str(bs)]) == 0
        pairs.append((out.read_bytes(), tree.read_bytes(), bs.read_bytes()))
    assert pairs[0] == pairs[1]


def test_order_flag(capsys, tmp_path):
    # the order flag changes the shortlex orientation of rules
    f = tmp_path / "p.txt"
    f.write_text("letters: a b\nrel: b a = a b\n")
    code, data = run_json(capsys, "complete", "--presentation", str(f))
    assert code == 0 and data["rules"] == [{"lhs": "b a", "rhs": "a b"}]
    code, data = run_json(capsys, "complete", "--presentation", str(f),
                          "--order", "b,a")
    assert code == 0 and data["rules"] == [{"lhs": "a b", "rhs": "b a"}]
