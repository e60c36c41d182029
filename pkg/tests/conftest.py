import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from tipeq.instances import InstanceSpec, generate
from tipeq.market import Market


def random_market(seed, family="random-unstructured", max_dim=3, grid=(0, 6), **kw):
    rng = np.random.default_rng(seed)
    dims = tuple(int(x) for x in rng.integers(1, max_dim + 1, size=3))
    return generate(InstanceSpec(family, seed=seed, dims=dims, grid=grid, **kw))


@st.composite
def markets(draw, max_dim=3, max_value=6, denominator=1):
    m = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_dim))
    l = draw(st.integers(1, max_dim))
    val = st.integers(0, max_value).map(lambda v: Fraction(v, denominator))
    values = [[draw(val) for _ in range(n)] for _ in range(m)]
    costs = [[[draw(val) for _ in range(n)] for _ in range(m)] for _ in range(l)]
    return Market.from_arrays(values, costs)


def all_partial_matchings(left, right):
    """Every set of disjoint (left, right) pairs, by brute force."""
    out = [()]
    for k in range(1, min(len(left), len(right)) + 1):
        for ls in itertools.combinations(left, k):
            for rs in itertools.permutations(right, k):
                out.append(tuple(zip(ls, rs)))
    return out


@pytest.fixture
def fig1():
    from tipeq.instances import fig1
    return fig1()


@pytest.fixture
def fig2():
    from tipeq.instances import fig2
    return fig2()


@pytest.fixture
def fig3():
    from tipeq.instances import fig3
    return fig3(3)
