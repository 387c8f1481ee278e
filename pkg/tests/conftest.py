import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from molrec.augment import default_rule_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def rules():
    return default_rule_table()


@pytest.fixture(scope="session")
def frozen_facts():
    with open(os.path.join(DATA_DIR, "parse_counts.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def hcount_corpus():
    with open(os.path.join(DATA_DIR, "hcount_corpus.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def equivalence_pairs():
    path = os.path.join(DATA_DIR, "equivalence_pairs.jsonl")
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    header, pairs = lines[0], lines[1:]
    return header, pairs


@pytest.fixture(scope="session")
def bundled_molecules():
    from molrec.dataset import load_molecule_list
    from importlib import resources

    return load_molecule_list(str(resources.files("molrec.data") / "molecules.smi"))
