from pathlib import Path

import pytest

from htlcswap.swapgraph import parse_digraph

DATA = Path(__file__).parent / "data"

DIGON = "l v\nv l\n"
THREE_CYCLE = "l a\na b\nb l\n"
DIGON_CHAIN = "a b\nb a\nb c\nc b\n"
NON_REUNICLUS = "a b\nb c\nc d\nd a\nb a\nd c\n"
BIDIRECTED_TRIANGLE = "a b\nb a\nb c\nc b\na c\nc a\n"


@pytest.fixture
def digon():
    return parse_digraph(DIGON)


@pytest.fixture
def three_cycle():
    return parse_digraph(THREE_CYCLE)


@pytest.fixture
def digon_chain():
    return parse_digraph(DIGON_CHAIN)


@pytest.fixture
def non_reuniclus():
    return parse_digraph(NON_REUNICLUS)


@pytest.fixture
def data_dir():
    return DATA
