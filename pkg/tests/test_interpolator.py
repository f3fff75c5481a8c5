import pytest

from formulas import parse
from interpolator import (
    EXIT_ERROR, EXIT_FALSE, EXIT_TRUE, EXIT_UNKNOWN, ConfigError, JobConfig, build_parser, main, read_input,
)
from kripke import Model
from type_elimination import entails


def test_sat_and_entails(capsys):
    assert main(["sat", "p & ~p"]) == EXIT_FALSE
    assert capsys.readouterr().out.strip() == "unsat"
    assert main(["entails", "--logic", "G", "atleast 2 R p", "<R> p"]) == EXIT_TRUE
    assert capsys.readouterr().out.strip() == "entailed"


def test_decide_named_loop(capsys):
    assert main(["decide", "--sigma", "R", "'a & <R> 'a", "'b & [R] ~'b"]) == EXIT_FALSE
    assert capsys.readouterr().out.startswith("no separator")


def test_decide_out_of_budget(capsys):
    assert main(["decide", "--sigma", "R,p", "--budget", "1", "<R> p", "<R> p"]) == EXIT_UNKNOWN
    assert capsys.readouterr().out.startswith("unknown")


def test_separate_writes_a_certificate(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    assert main(["separate", "--sigma", "p", "--output", str(cert), "p & q", "~p & r"]) == EXIT_TRUE
    sep = parse(capsys.readouterr().out.strip())
    assert entails(parse("p & q"), sep)
    assert main(["verify-cert", str(cert)]) == EXIT_TRUE
    assert capsys.readouterr().out.strip() == "valid"


def test_separate_reports_none(capsys):
    assert main(["separate", "--sigma", "p", "p", "p"]) == EXIT_FALSE
    assert capsys.readouterr().out.startswith("none:")


def test_interpolate(capsys):
    assert main(["interpolate", "p & q", "p | r"]) == EXIT_TRUE
    interpolant = parse(capsys.readouterr().out.strip())
    assert entails(parse("p & q"), interpolant)
    assert entails(interpolant, parse("p | r"))


def test_fo_engine(capsys):
    assert main(["separate", "--engine", "fo", "--sigma", "p", "'a & p", "'a & ~p"]) == EXIT_TRUE
    assert capsys.readouterr().out.startswith("exists a.")


def test_explain_writes_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["explain", "--sigma", "p", "--csv", str(trace), "p", "~p"]) == EXIT_TRUE
    assert trace.read_text().startswith("round,hypermosaic,mosaic,obligation")
    capsys.readouterr()
    assert main(["explain", "--engine", "shared", "--json", "--sigma", "p", "p", "~p"]) == EXIT_TRUE
    assert '"engine": "shared"' in capsys.readouterr().out


def test_oracle_and_modelcheck(tmp_path, capsys):
    assert main(["oracle", "--sigma", "", "p", "q"]) == EXIT_TRUE
    assert main(["oracle", "--sigma", "p", "--max-oracle-worlds", "1", "p", "~p"]) == EXIT_FALSE
    path = tmp_path / "model.json"
    Model(2, {"R": {(0, 1)}}, {"p": {1}}, {}).save(str(path))
    assert main(["modelcheck", str(path), "0", "<R> p"]) == EXIT_TRUE
    assert main(["modelcheck", str(path), "1", "<R> p"]) == EXIT_FALSE
    capsys.readouterr()


def test_file_inputs(tmp_path, capsys):
    f = tmp_path / "f.hml"
    f.write_text("p & ~p\n")
    assert read_input(f"@{f}") == "p & ~p"
    assert main(["sat", f"@{f}"]) == EXIT_FALSE
    assert main(["sat", f"@{tmp_path / 'missing.hml'}"]) == EXIT_ERROR
    capsys.readouterr()


def test_errors(capsys):
    assert main(["sat", "--logic", "K", "p"]) == EXIT_ERROR
    assert main(["sat", "p &"]) == EXIT_ERROR
    assert main(["sat", "--logic", "H", "@a p"]) == EXIT_ERROR
    assert main(["decide", "--budget", "0", "p", "q"]) == EXIT_ERROR
    with pytest.raises(SystemExit):
        build_parser().parse_args(["decide", "--mode", "guess", "p", "q"])
    with pytest.raises(ConfigError):
        JobConfig("frobnicate")
    capsys.readouterr()


def test_bench_emit(tmp_path, capsys):
    assert main(["bench", "emit", "--family", "phi_n", "--n", "3", "--out", str(tmp_path)]) == EXIT_TRUE
    assert (tmp_path / "manifest.json").exists()
    assert main(["bench", "growth", "--family", "phi_n", "--ns", "2", "3", "--out", str(tmp_path)]) == EXIT_TRUE
    assert (tmp_path / "phi_n_growth.csv").exists()
    assert main(["bench", "emit", "--family", "phi_n", "--n", "1", "--out", str(tmp_path)]) == EXIT_ERROR
    capsys.readouterr()


def test_work_budget_and_seed(capsys):
    assert main(["separate", "--sigma", "R,p", "--work-budget", "1", "<R> p", "[R] ~p"]) == EXIT_UNKNOWN
    assert capsys.readouterr().out.startswith("unknown")
    assert main(["separate", "--work-budget", "0", "p", "~p"]) == EXIT_ERROR
    assert main(["oracle", "--seed", "-1", "p", "q"]) == EXIT_ERROR
    assert main(["oracle", "--json", "--seed", "5", "--sigma", "", "p", "q"]) == EXIT_TRUE
    assert '"seed": 5' in capsys.readouterr().out
    with pytest.raises(ConfigError):
        JobConfig("separate", work_budget=0)
