import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncsched import data
from ncsched.certificates import ModeScalars
from ncsched.graph import VertexLabel, edge_weight, enumerate_vertices, vertex_count, vertex_weight


def test_vertex_count_table_value():
    assert vertex_count(5, 2) == 10
    assert vertex_count(1000, 10) == 263409560461970212832400
    with pytest.raises(ValueError):
        vertex_count(3, 3)


@given(st.integers(2, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))))
def test_enumeration_matches_count(nm):
    N, M = nm
    vs = enumerate_vertices(N, M)
    assert len(vs) == vertex_count(N, M) == len(set(vs))
    assert vs == sorted(vs)


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_vertices(40, 20)


def test_published_vertex_numbering():
    vs = enumerate_vertices(5, 2)
    assert [v.stable_set for v in vs] == data.FIVE_VERTICES
    assert vs[4].stable_set == data.vbar(5) == (2, 3)


def test_label_validation_and_modes():
    v = VertexLabel(5, (3, 1))
    assert v.stable_set == (1, 3)
    assert str(v) == "{1,3}"
    assert v.mode(1) == "s" and v.mode(2) == "u"
    assert v.mask().tolist() == [True, False, True, False, False]
    for bad in [(1, 1), (), (1, 2, 3, 4, 5), (0, 2), (6,)]:
        with pytest.raises(ValueError):
            VertexLabel(5, bad)


def test_weights():
    certs = [ModeScalars(0.5, 2.0, 3.0, 4.0), ModeScalars(0.25, 1.5, 5.0, 6.0), ModeScalars(0.1, 3.0, 7.0, 8.0)]
    u, v = VertexLabel(3, (1,)), VertexLabel(3, (2,))
    assert np.allclose(vertex_weight(u, certs), [math.log(0.5), math.log(1.5), math.log(3.0)])
    assert np.allclose(edge_weight(u, v, certs), [math.log(3.0), math.log(6.0), 0.0])
    with pytest.raises(ValueError):
        edge_weight(u, u, certs)
    with pytest.raises(ValueError):
        vertex_weight(u, certs[:2])


def test_edge_weight_is_zero_for_unchanged_modes():
    certs = [ModeScalars(0.5, 2.0, 3.0, 4.0)] * 4
    for u, v in itertools.permutations(enumerate_vertices(4, 2), 2):
        w = edge_weight(u, v, certs)
        same = u.mask() == v.mask()
        assert np.all(w[same] == 0.0)
        assert np.all(w[~same] > 0.0)
