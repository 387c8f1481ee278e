import itertools
import math

import pytest

from molrec.layout import LayoutError, layout
from molrec.smiles import parse


def test_two_atoms_unit_distance():
    g = layout(parse("CO"))
    d = math.dist(g.atoms[0].coords, g.atoms[1].coords)
    # one unit bond at -30 degrees, scaled so its x-extent fills the 0.8 box
    assert d == pytest.approx(0.8 / math.cos(math.radians(30)), abs=1e-9)


def test_benzene_regular_hexagon():
    g = layout(parse("c1ccccc1"))
    pts = [a.coords for a in g.atoms]
    dists = sorted(math.dist(p, q) for p, q in itertools.combinations(pts, 2))
    edge = dists[0]
    assert all(abs(d - edge) < 1e-6 for d in dists[:6])
    assert all(abs(d - edge * math.sqrt(3)) < 1e-6 for d in dists[6:12])
    assert all(abs(d - 2 * edge) < 1e-6 for d in dists[12:])


def test_hexane_zigzag():
    g = layout(parse("CCCCCC"))
    pts = [a.coords for a in g.atoms]
    angles = [
        math.degrees(math.atan2(pts[i + 1][1] - pts[i][1], pts[i + 1][0] - pts[i][0]))
        for i in range(5)
    ]
    expected = [-30.0, 30.0, -30.0, 30.0, -30.0]
    assert all(abs(a - b) < 1e-6 for a, b in zip(angles, expected))


def test_coordinates_in_range():
    for smi in ["CC(C)Cc1ccc(cc1)C(C)C(=O)O", "c1ccc2ccccc2c1", "C1CCC2(CC1)CCCC2",
                "CN1C=NC2=C1C(=O)N(C)C(=O)N2C", "[NH4+].[Cl-]"]:
        g = layout(parse(smi))
        for a in g.atoms:
            assert 0.0 <= a.x < 1.0 and 0.0 <= a.y < 1.0


def test_existing_coordinates_untouched():
    g = parse("CC")
    g.atoms[0].x, g.atoms[0].y = 0.25, 0.5
    g.atoms[1].x, g.atoms[1].y = 0.75, 0.5
    out = layout(g)
    assert out.atoms[0].coords == (0.25, 0.5)
    assert out.atoms[1].coords == (0.75, 0.5)


def test_bridged_system_raises():
    with pytest.raises(LayoutError):
        layout(parse("C1CC2CCC1CC2"))


def test_unit_bond_lengths_consistent():
    g = layout(parse("CCCCCCCC"))
    lengths = [
        math.dist(g.atoms[b.begin].coords, g.atoms[b.end].coords) for b in g.bonds
    ]
    assert max(lengths) - min(lengths) < 1e-9
