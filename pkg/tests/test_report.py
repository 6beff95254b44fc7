import csv

import mpmath
import pytest

from hurwitz.algebra import PermTuple
from hurwitz.monodromy import RationalMap
from hurwitz.pipeline import HurwitzProblem, run
from hurwitz.report import fibre_points, write_report


@pytest.fixture(scope="module")
def four_certs():
    pr = HurwitzProblem(PermTuple.from_cycles(3, ["(1,2)", "(1,2)", "(2,3)", "(2,3)"]), ("inf", 0, 1, -4))
    return [c.to_json(30) for c in run(pr).conjugates], pr.to_json()["points"]


def test_fibre_points_skip_infinity():
    f = RationalMap([0, 0, 3, -2], [1])
    pts = fibre_points(f, ["inf", 0, 1])
    assert pts[0] == []
    assert sorted(round(z.real, 6) for z in pts[1]) == [0.0, 0.0, 1.5]


def test_write_report(tmp_path, four_certs):
    certs, points = four_certs
    paths = write_report(certs, points, str(tmp_path))
    names = sorted(p.split("/")[-1] for p in paths)
    assert names == ["conjugates.tsv", "fibres_0.png", "fibres_1.png", "fibres_2.png", "fibres_3.png", "loops.png"]
    for p in paths:
        if p.endswith(".png"):
            with open(p, "rb") as fh:
                assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.DictReader(open(tmp_path / "conjugates.tsv"), delimiter="\t"))
    assert len(rows) == 4 * len(certs[0]["coordinates"])
    assert sum(int(r["matches"]) for r in rows if r["coordinate"] == "0") == 1
    with mpmath.workdps(30):
        for r in rows:
            c = certs[int(r["conjugate"])]["coordinates"][int(r["coordinate"])]
            assert r["re"] == c["root"]["re"]
