import json
from fractions import Fraction
from importlib import resources

import pytest

from ttkit import fixtures
from ttkit.cli import main
from ttkit.dsl import (ParseError, export_dot, parse_graph, parse_map,
                       print_graph, print_map)


def data_path(name):
    return str(resources.files("ttkit.data").joinpath(name))


CORPUS = [("rose2.g", "phifib.map"),
          ("theta314.g", "theta314.map"),
          ("fig322.g", "fig322.map"),
          ("exjumpseg.g", "exjumpseg.map")]


@pytest.mark.parametrize("gfile,mfile", CORPUS)
def test_round_trip_on_corpus(gfile, mfile):
    gtext = resources.files("ttkit.data").joinpath(gfile).read_text()
    mtext = resources.files("ttkit.data").joinpath(mfile).read_text()
    gname, g = parse_graph(gtext)
    mname, f = parse_map(mtext, g, gname)
    # print is canonical: parse(print(x)) == x and print is a fixpoint
    assert parse_graph(print_graph(g, gname))[1].edges == g.edges
    assert print_graph(parse_graph(print_graph(g, gname))[1], gname) == \
        print_graph(g, gname)
    reparsed = parse_map(print_map(f, mname, gname), g, gname)[1]
    assert reparsed.vertex_image == f.vertex_image
    for e in g.edges:
        assert reparsed.edge_image[e].letters == f.edge_image[e].letters


def test_corpus_matches_programmatic_fixtures():
    gname, g = parse_graph(
        resources.files("ttkit.data").joinpath("exjumpseg.g").read_text())
    ge, fe = fixtures.exjumpseg()
    assert g.edges == ge.edges and g.vertices == ge.vertices
    _, f = parse_map(
        resources.files("ttkit.data").joinpath("exjumpseg.map").read_text(),
        g, gname)
    for e in g.edges:
        assert f.edge_image[e].letters == fe.edge_image[e].letters


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        parse_graph("vertex v free\nedge e v w len 1")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_graph("vertex v free\nedge e v v len -1")
    g = fixtures.rose2()
    with pytest.raises(ParseError):
        parse_map("map f on r\nv v -> vertex nope", g, "r")


def test_fractional_letters_round_trip():
    g, f = fixtures.theta314()
    text = print_map(f, "t", "theta")
    assert "[" in text  # fractional letters present
    _, f2 = parse_map(text, g, "theta")
    for e in g.edges:
        assert f2.edge_image[e].letters == f.edge_image[e].letters


def test_export_dot_shapes():
    g = fixtures.rose2()
    dot = export_dot(g, name="rose2")
    assert dot.count("->") == 2
    assert '"v"' in dot
    gt, ft = fixtures.theta314()
    dot2 = export_dot(gt, ft, name="theta")
    # every edge is maximally stretched, so all three are styled
    assert dot2.count("penwidth=2") == 3


def test_cli_validate_and_lambda(capsys):
    assert main(["validate", data_path("rose2.g")]) == 0
    assert "isValidPoint true" in capsys.readouterr().out
    assert main(["lambda", data_path("theta314.g"),
                 data_path("theta314.map")]) == 0
    out = capsys.readouterr().out
    assert "2.414213562" in out


def test_cli_structured_minimize(capsys):
    rc = main(["--format", "structured", "minimize",
               data_path("rose2.g"), data_path("phifib.map")])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out)
    assert abs(rec["lambda"]["decimal"] - 1.6180339887) < 1e-6
    assert rec["boundaryFlags"] == []
    num, den = map(int, rec["lambda"]["exact"].split("/"))
    assert abs(Fraction(num, den) - Fraction(rec["lambda"]["decimal"]).limit_denominator()) < 1


def test_cli_traintrack_and_jump(capsys):
    rc = main(["--format", "structured", "traintrack",
               data_path("exjumpseg.g"), data_path("exjumpseg.map")])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["classification"] == "TrainTrackAtInfinity"
    assert rec["collapseStack"] == [["a0", "b0"]]
    rc = main(["jump", data_path("exjumpseg.g"), data_path("exjumpseg.map"),
               "--collapse", "a0,b0"])
    assert rc == 0
    assert "NotJumped" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.g"
    bad.write_text("vertex oops\n")
    assert main(["validate", str(bad)]) == 2
    # domain error: collapsing a non-invariant subgraph
    assert main(["jump", data_path("exjumpseg.g"), data_path("exjumpseg.map"),
                 "--collapse", "a1,b1"]) == 1
    err = capsys.readouterr().err
    assert "NotInvariant" in err


def test_cli_weakopt_trace(tmp_path, capsys):
    trace = tmp_path / "events.jsonl"
    rc = main(["weakopt", data_path("theta314.g"), data_path("theta314.map"),
               "--trace", str(trace)])
    assert rc == 0
    assert trace.exists()
    for line in trace.read_text().splitlines():
        json.loads(line)


def test_cli_fixtures_listing(capsys):
    assert main(["fixtures"]) == 0
    out = capsys.readouterr().out
    for name, _ in CORPUS:
        assert name in out
