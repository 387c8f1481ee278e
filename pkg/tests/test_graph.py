import pytest

from molrec.graph import (
    AtomKind,
    AtomLabel,
    BondType,
    GraphError,
    MolGraph,
    molecular_formula,
)


def test_add_atom_appends():
    g = MolGraph()
    assert g.add_atom(AtomLabel(element="C"), (0.5, 0.5)) == 0
    g.add_atom(AtomLabel(element="C"), (0.2, 0.2))
    assert g.add_atom(AtomLabel(element="O"), (0.1, 0.9)) == 2


def test_add_atom_rejects_out_of_range_coords():
    g = MolGraph()
    with pytest.raises(GraphError):
        g.add_atom(AtomLabel(element="C"), (1.0, 0.5))
    with pytest.raises(GraphError):
        g.add_atom(AtomLabel(element="C"), (-0.1, 0.5))
    with pytest.raises(GraphError):
        g.add_atom(AtomLabel(element="C"), (float("nan"), 0.5))


def test_charge_bound_enforced():
    with pytest.raises(GraphError):
        AtomLabel(element="C", charge=-5)
    with pytest.raises(GraphError):
        AtomLabel(element="C", charge=5)


def test_add_bond_and_errors():
    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    g.add_atom(AtomLabel(element="C"))
    g.add_bond(0, 1, BondType.SINGLE)
    assert len(g.bonds) == 1
    with pytest.raises(GraphError):
        g.add_bond(0, 0, BondType.SINGLE)
    with pytest.raises(GraphError):
        g.add_bond(0, 1, BondType.SINGLE)
    with pytest.raises(GraphError):
        g.add_bond(1, 0, BondType.DOUBLE)  # same unordered pair
    with pytest.raises(GraphError):
        g.add_bond(0, 7, BondType.SINGLE)


def test_implicit_hydrogens_methane():
    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    assert g.implicit_hydrogens(0) == 4


def test_implicit_hydrogens_carbonyl_oxygen():
    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    g.add_atom(AtomLabel(element="O"))
    g.add_bond(0, 1, BondType.DOUBLE)
    assert g.implicit_hydrogens(1) == 0


def test_explicit_h_count_wins():
    g = MolGraph()
    g.add_atom(AtomLabel(element="N", charge=1, explicit_h=3))
    g.add_atom(AtomLabel(element="C"))
    g.add_bond(0, 1, BondType.SINGLE)
    assert g.implicit_hydrogens(0) == 3


def test_charge_adjusted_valence():
    g = MolGraph()
    g.add_atom(AtomLabel(element="N", charge=1))
    assert g.implicit_hydrogens(0) == 4  # ammonium
    g2 = MolGraph()
    g2.add_atom(AtomLabel(element="O", charge=-1))
    assert g2.implicit_hydrogens(0) == 1  # hydroxide


def test_implicit_hydrogens_not_applicable_for_pseudo():
    g = MolGraph()
    g.add_atom(AtomLabel(kind=AtomKind.ABBREVIATION, text="Me"))
    with pytest.raises(GraphError):
        g.implicit_hydrogens(0)


def test_validate_valence():
    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    assert g.validate_valence() == []

    g = MolGraph()
    c = g.add_atom(AtomLabel(element="C"))
    for _ in range(5):
        n = g.add_atom(AtomLabel(element="H"))
        g.add_bond(c, n, BondType.SINGLE)
    violations = g.validate_valence()
    assert [v.atom for v in violations] == [c]
    assert violations[0].allowed == 4


def test_validate_valence_skips_pseudo_atoms():
    g = MolGraph()
    a = g.add_atom(AtomLabel(kind=AtomKind.ABBREVIATION, text="Me"))
    for _ in range(6):
        n = g.add_atom(AtomLabel(element="C"))
        g.add_bond(a, n, BondType.SINGLE)
    assert all(v.atom != a for v in g.validate_valence())


def test_verify_catches_bad_parity():
    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    g.add_atom(AtomLabel(element="C"))
    g.add_bond(0, 1, BondType.SINGLE)
    g.atoms[0].parity = "ccw"
    g.atoms[0].parity_neighbors = (1,)
    with pytest.raises(GraphError):
        g.verify()


def test_ring_atoms():
    from molrec import parse

    g = parse("C1CC1CC")
    assert g.ring_atoms() == {0, 1, 2}


def test_hydrogen_counts_match_reference_toolkit(hcount_corpus):
    """Total implicit H agrees with the frozen RDKit verdicts on the corpus."""
    from molrec import parse

    for smiles, want in hcount_corpus["hcounts"].items():
        g = parse(smiles)
        total = 0
        for i, atom in enumerate(g.atoms):
            if atom.label.kind == AtomKind.ELEMENT:
                if atom.label.element == "H":
                    total += 1
                total += g.implicit_hydrogens(i)
        assert total == want, smiles


def test_molecular_formula():
    from molrec import parse

    f = molecular_formula(parse("CCO"))
    assert f == {"C": 2, "O": 1, "H": 6}
