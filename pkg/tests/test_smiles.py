import random

import pytest

from molgen import random_aromatic_ring, random_molecule
from molrec.graph import IMPLICIT_H, AtomKind, BondType
from molrec.smiles import ParseError, parse, tokenize, write


def kinds(text):
    return [t.kind for t in tokenize(text)]


def test_tokenize_acetic_acid():
    toks = tokenize("CC(=O)O")
    assert [t.text for t in toks] == ["C", "C", "(", "=", "O", ")", "O"]
    assert kinds("CC(=O)O") == [
        "atom", "atom", "open_paren", "bond_symbol", "atom", "close_paren", "atom",
    ]


def test_tokenize_ring_digits():
    assert [t.text for t in tokenize("C1CC1")] == ["C", "1", "C", "C", "1"]
    assert [t.text for t in tokenize("C%12CC%12")] == ["C", "%12", "C", "C", "%12"]


def test_tokenize_unbalanced_bracket_offset():
    with pytest.raises(ParseError) as err:
        tokenize("C[Se][")
    assert err.value.offset == 5


def test_tokenize_illegal_character():
    with pytest.raises(ParseError):
        tokenize("C!C")


def test_tokenize_lossless_on_random_molecules():
    rng = random.Random(5)
    for _ in range(200):
        text = write(random_molecule(rng, 20))
        assert "".join(t.text for t in tokenize(text)) == text


def test_parse_cyclohexane_counts(frozen_facts):
    g = parse("C1CCCCC1")
    assert len(g.atoms) == frozen_facts["cyclohexane"]["atoms"]
    assert len(g.bonds) == frozen_facts["cyclohexane"]["bonds"]


def test_parse_acetaldehyde(frozen_facts):
    g = parse("CC=O")
    assert len(g.atoms) == frozen_facts["acetaldehyde"]["atoms"]
    assert g.bond_between(1, 2).type == BondType.DOUBLE


def test_parse_alanine_stereo():
    g = parse("N[C@@H](C)C(=O)O")
    assert len(g.atoms) == 6
    center = g.atoms[1]
    assert center.parity == "cw"
    assert center.parity_neighbors == (0, IMPLICIT_H, 2, 3)


def test_parse_ring_bond_symbol_either_side():
    assert write(parse("C1CC=1")) == write(parse("C=1CC1"))
    with pytest.raises(ParseError):
        parse("C=1CC#1")


def test_parse_errors():
    with pytest.raises(ParseError):
        parse("C1CC")  # unmatched ring digit
    with pytest.raises(ParseError):
        parse("CC=")  # dangling bond
    with pytest.raises(ParseError):
        parse("C(C")  # unclosed branch
    with pytest.raises(ParseError):
        parse("C)C")
    with pytest.raises(ParseError):
        parse("C=.C")  # bond symbol before dot
    with pytest.raises(ParseError):
        parse("C11")  # self ring closure


def test_parse_dot_fragments():
    g = parse("[NH4+].[Cl-]")
    assert len(g.atoms) == 2
    assert len(g.bonds) == 0
    assert g.atoms[0].label.charge == 1
    assert g.atoms[1].label.charge == -1


def test_parse_strict_rejects_pseudo_atoms():
    parse("[Me]C")  # lenient accepts
    with pytest.raises(ParseError):
        parse("[Me]C", strict=True)
    with pytest.raises(ParseError):
        parse("[R1]C", strict=True)


def test_rgroup_bracket_labels():
    g = parse("[R1]C[Ar]")
    assert g.atoms[0].label.kind == AtomKind.RGROUP
    assert g.atoms[2].label.kind == AtomKind.RGROUP
    assert g.atoms[2].label.text == "Ar"


def test_bracket_attributes_roundtrip():
    for text in ["[13CH4]", "[NH3+]", "[O-]", "[2H]", "[Fe]", "[Si](C)(C)(C)C", "[nH]1cccc1"]:
        assert write(parse(text)) == text


def test_write_single_atom():
    from molrec.graph import AtomLabel, MolGraph

    g = MolGraph()
    g.add_atom(AtomLabel(element="C"))
    assert write(g) == "C"


def test_write_cyclohexane_roundtrip():
    g = parse("C1CCCCC1")
    g2 = parse(write(g))
    assert len(g2.atoms) == 6 and len(g2.bonds) == 6


def test_write_never_emits_unmatched_ring_digits():
    rng = random.Random(11)
    for k in range(150):
        g = random_aromatic_ring(rng) if k % 5 == 0 else random_molecule(rng, 25)
        open_digits = {}
        for tok in tokenize(write(g)):
            if tok.kind == "ring_digit":
                open_digits[tok.text] = open_digits.get(tok.text, 0) + 1
        assert all(count % 2 == 0 for count in open_digits.values())


def test_roundtrip_property_100_molecules():
    from molrec.canon import canonicalize

    rng = random.Random(99)
    for _ in range(100):
        g = random_molecule(rng, 30)
        s = write(g)
        assert canonicalize(write(parse(s))) == canonicalize(s)


def test_aromatic_single_bond_needs_symbol():
    # biphenyl: plain single bond between two aromatic atoms must print "-"
    text = write(parse("c1ccccc1-c1ccccc1"))
    assert "-" in text
    g = parse(text)
    bridge = [b for b in g.bonds if b.type == BondType.SINGLE]
    assert len(bridge) == 1


def test_cis_trans_recorded_not_interpreted():
    from molrec.graph import BondDirection

    g = parse("F/C=C/F")
    dirs = {b.direction for b in g.bonds}
    assert BondDirection.UP in dirs
    assert write(g) == "FC=CF"
