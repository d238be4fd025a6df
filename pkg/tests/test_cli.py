"""The command-line interface, driven in-process."""

import io

import pytest

from cspasp.cli import main

HALL = "var v1 2 3\nvar v2 { 1 2 4 }\nvar v3 2 3\nvar v4 1 4\nalldifferent v1 v2 v3 v4\n"
TINY = "var x 1 2\nvar y 1 2\nalldifferent x y\n"
UNSAT_TINY = "var x 1 1\nvar y 1 1\nalldifferent x y\n"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- encode ---------------------------------------------------------------------


def test_encode_emits_header_then_program(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, out, err = run(capsys, "encode", "-e", "direct", path)
    assert code == 0 and err == ""
    lines = out.splitlines()
    assert lines[0] == "% cspasp encoding=direct hall_limit=-"
    assert lines[1:4] == ["% var x 1 2", "% var y 1 2", "% alldifferent x y"]
    assert lines[4] == "% end"
    assert lines[5] == "{e(x,1); e(x,2)}."
    assert lines[-1].endswith(".")


def test_encode_no_header_is_pure_ground_text(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, out, _ = run(capsys, "encode", "-e", "direct", "--no-header", path)
    assert code == 0
    assert all(not line.startswith("%") for line in out.splitlines())


def test_encode_writes_output_file(capsys, tmp_path):
    src = write(tmp_path, "t.csp", TINY)
    dst = tmp_path / "out.lp"
    code, out, _ = run(capsys, "encode", src, "-o", str(dst))
    assert code == 0 and out == ""
    assert dst.read_text().startswith("% cspasp encoding=support")


def test_encode_hall_limit_recorded_in_header(capsys, tmp_path):
    path = write(tmp_path, "h.csp", HALL)
    code, out, _ = run(capsys, "encode", "-e", "range", "--hall-limit", "2", path)
    assert code == 0
    assert out.splitlines()[0] == "% cspasp encoding=range hall_limit=2"


# -- solve ----------------------------------------------------------------------


def test_solve_satisfiable_instance(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, out, _ = run(capsys, "solve", path)
    assert code == 10
    assert out.splitlines()[0] == "SAT"
    body = dict(line.split(" = ") for line in out.splitlines()[1:])
    assert set(body) == {"x", "y"} and {body["x"], body["y"]} == {"1", "2"}


def test_solve_unsatisfiable_instance(capsys, tmp_path):
    path = write(tmp_path, "u.csp", UNSAT_TINY)
    code, out, _ = run(capsys, "solve", path)
    assert (code, out) == (20, "UNSAT\n")


def test_solve_stats_line(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, out, _ = run(capsys, "solve", "--stats", path)
    assert code == 10
    assert out.splitlines()[-1].startswith("decisions=")


def test_piped_encode_output_solves_identically(capsys, tmp_path, monkeypatch):
    path = write(tmp_path, "h.csp", HALL)
    code, direct_out, _ = run(capsys, "solve", "-e", "range", path)
    assert code == 10

    code, encoded, _ = run(capsys, "encode", "-e", "range", path)
    assert code == 0
    monkeypatch.setattr("sys.stdin", io.StringIO(encoded))
    code, piped_out, _ = run(capsys, "solve", "-")
    assert code == 10
    assert piped_out == direct_out  # byte-for-byte, header carries everything


def test_solve_reads_raw_ground_programs(capsys, tmp_path):
    path = write(tmp_path, "g.lp", "{a; b}.\n:- a, b.\n:- not a, not b.\n")
    code, out, _ = run(capsys, "solve", path)
    assert code == 10
    assert out in ("SAT\na\n", "SAT\nb\n")  # exactly one atom survives


def test_solve_enumerate_lists_models(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, out, _ = run(capsys, "solve", "--enumerate", "0", path)
    assert code == 10
    assert out.startswith("MODEL 1\n")
    assert out.splitlines()[-1] == "models = 2"
    assert "x = 1" in out and "x = 2" in out


def test_solve_enumerate_reports_zero_models(capsys, tmp_path):
    path = write(tmp_path, "u.csp", UNSAT_TINY)
    code, out, _ = run(capsys, "solve", "--enumerate", "0", path)
    assert (code, out) == (20, "models = 0\n")


def test_solve_timeout_gives_unknown(capsys, tmp_path, monkeypatch):
    code, gen_out, _ = run(capsys, "gen", "php", "--n", "8")
    monkeypatch.setattr("sys.stdin", io.StringIO(gen_out))
    code, out, _ = run(capsys, "solve", "--timeout", "0", "-")
    assert (code, out) == (2, "UNKNOWN\n")


def test_solve_emit_nogoods(capsys, tmp_path):
    src = write(tmp_path, "one.csp", "var x 1 2\n")
    dump = tmp_path / "ng.txt"
    code, _, _ = run(capsys, "solve", "--emit-nogoods", str(dump), src)
    assert code == 10
    text = dump.read_text()
    assert "e(x,1)" in text and "\n" in text


# -- errors ----------------------------------------------------------------------


def test_malformed_instance_reports_position(capsys, tmp_path):
    path = write(tmp_path, "b.csp", "vr x 1 2\n")
    code, out, err = run(capsys, "solve", path)
    assert code == 1 and out == ""
    assert "line 1, col 1" in err


def test_missing_file_is_a_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "solve", str(tmp_path / "nope.csp"))
    assert code == 1
    assert "nope.csp" in err


def test_hall_limit_rejected_for_value_encodings(capsys, tmp_path):
    path = write(tmp_path, "t.csp", TINY)
    code, _, err = run(capsys, "solve", "--hall-limit", "2", "-e", "direct", path)
    assert code == 1
    assert "--hall-limit" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--nope"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


# -- check -----------------------------------------------------------------------


def test_check_reports_agreement(capsys):
    code, out, _ = run(
        capsys, "check", "--encoding", "support", "--level", "ac",
        "--seed", "7", "--trials", "25",
    )
    assert code == 0
    assert out == "agree 25/25\n"


def test_check_default_level_follows_encoding(capsys):
    code, out, _ = run(capsys, "check", "--encoding", "range", "--trials", "10")
    assert code == 0
    assert out == "agree 10/10\n"


# -- gen -------------------------------------------------------------------------


def test_gen_php_round_trips_through_solve(capsys, monkeypatch):
    code, text, _ = run(capsys, "gen", "php", "--n", "4")
    assert code == 0
    assert text.splitlines()[0] == "var p1 1 3"
    monkeypatch.setattr("sys.stdin", io.StringIO(text))
    code, out, _ = run(capsys, "solve", "-")
    assert (code, out) == (20, "UNSAT\n")


def test_gen_qcp_is_seed_deterministic(capsys):
    _, first, _ = run(capsys, "gen", "qcp", "--order", "5", "--fill", "40", "--seed", "3")
    _, second, _ = run(capsys, "gen", "qcp", "--order", "5", "--fill", "40", "--seed", "3")
    _, third, _ = run(capsys, "gen", "qcp", "--order", "5", "--fill", "40", "--seed", "4")
    assert first == second != third


def test_gen_qep_and_ggp(capsys):
    code, out, _ = run(capsys, "gen", "qep", "--axiom", "QG5", "--order", "4")
    assert code == 0 and "assign m_1_1 1" in out
    code, out, _ = run(capsys, "gen", "ggp", "--n", "3")
    assert code == 0 and "permutation" in out


# -- bench -----------------------------------------------------------------------


def test_bench_text_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "rows.csv"
    code, out, _ = run(
        capsys, "bench", "--spec", "php:n=4", "-e", "bound", "-e", "range",
        "--csv", str(csv_path),
    )
    assert code == 0
    assert out.splitlines()[0].split()[:3] == ["family", "params", "encoding"]
    rows = csv_path.read_text().splitlines()
    assert rows[0].startswith("family,params,")
    assert len(rows) == 3
    assert rows[1].startswith("php,n=4,bound,")


def test_bench_rejects_unknown_family_or_param(capsys):
    code, _, err = run(capsys, "bench", "--spec", "sudoku:n=4")
    assert code == 1 and "sudoku" in err
    code, _, err = run(capsys, "bench", "--spec", "php:m=4")
    assert code == 1
