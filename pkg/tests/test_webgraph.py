import numpy as np
import pytest
from hypothesis import given, strategies as st

from asyncrank.errors import ParameterError, ParseError, RangeError
from asyncrank.webgraph import (
    AdjacencyGraph,
    build_all_blocks,
    build_transition_block,
    format_edge_list,
    generate_synthetic,
    parse_edge_list,
    partition_rows,
    read_edge_list,
    write_edge_list,
)

from conftest import graph_of, graphs


def edge_set(g):
    s, d = g.edges()
    return set(zip(s.tolist(), d.tolist()))


class TestParse:
    def test_two_cycle(self):
        g = parse_edge_list("0 1\n1 0\n")
        assert g.n == 2
        assert edge_set(g) == {(0, 1), (1, 0)}
        assert g.dangling.tolist() == [False, False]

    def test_comment_and_dangling(self):
        g = parse_edge_list("# crawl\n0 1\n")
        assert g.n == 2
        assert edge_set(g) == {(0, 1)}
        assert g.dangling.tolist() == [False, True]

    def test_duplicates_collapse(self):
        g = parse_edge_list("0 1\n0 1\n")
        assert g.nnz == 1
        assert g.out_degree.tolist() == [1, 0]

    def test_self_loop_counts(self):
        g = parse_edge_list("0 0\n0 1\n")
        assert g.out_degree.tolist() == [2, 0]

    def test_one_based(self):
        g = parse_edge_list("1 2\n2 3\n", base_index=1)
        assert g.n == 3
        assert edge_set(g) == {(0, 1), (1, 2)}

    def test_declared_n_adds_isolated_pages(self):
        g = parse_edge_list("0 1\n", declared_n=5)
        assert g.n == 5
        assert g.dangling.sum() == 4

    def test_nodes_header(self):
        g = parse_edge_list("# Nodes: 4 Edges: 1\n0 1\n")
        assert g.n == 4

    @pytest.mark.parametrize("text,line", [
        ("0 1\n1 x\n", 2),
        ("0 1 2\n", 1),
        ("0 1\n\n7\n", 3),
    ])
    def test_malformed_line(self, text, line):
        with pytest.raises(ParseError) as info:
            parse_edge_list(text)
        assert info.value.line_number == line
        assert f"line {line}" in str(info.value)

    def test_id_over_declared(self):
        with pytest.raises(RangeError):
            parse_edge_list("0 3\n", declared_n=3)

    def test_negative_id(self):
        with pytest.raises(RangeError):
            parse_edge_list("0 1\n", base_index=1)

    def test_file_round_trip(self, tmp_path, g3):
        path = tmp_path / "g.txt"
        write_edge_list(g3, path)
        assert read_edge_list(path) == g3

    def test_serialization_sorted(self):
        g = graph_of(3, [(2, 0), (0, 2), (0, 1)])
        lines = [l for l in format_edge_list(g).splitlines() if not l.startswith("#")]
        assert lines == ["0 1", "0 2", "2 0"]

    @given(graphs())
    def test_round_trip_property(self, g):
        assert parse_edge_list(format_edge_list(g)) == g
        assert parse_edge_list(format_edge_list(g, comments=False), declared_n=g.n) == g


class TestSynthetic:
    def test_all_dangling(self):
        g = generate_synthetic(5, 0.0, 1.0, 7)
        assert g.n == 5
        assert g.dangling.all()

    def test_seed_determinism(self):
        assert generate_synthetic(100, 3.0, 0.0, 1) == generate_synthetic(100, 3.0, 0.0, 1)

    def test_zero_fraction_means_no_dangling(self):
        assert not generate_synthetic(100, 3.0, 0.0, 1).dangling.any()

    def test_dangling_count_concentrates(self):
        g = generate_synthetic(1000, 8.0, 0.1, 42)
        count = int(np.count_nonzero(g.out_degree == 0))
        assert 70 <= count <= 130

    def test_mean_degree_roughly_right(self):
        g = generate_synthetic(2000, 8.0, 0.0, 3)
        assert 7.0 < g.out_degree.mean() < 9.0

    @pytest.mark.parametrize("kwargs", [
        dict(n=10, avg_out_degree=2.0, dangling_fraction=1.5, seed=0),
        dict(n=10, avg_out_degree=2.0, dangling_fraction=-0.1, seed=0),
        dict(n=0, avg_out_degree=2.0, dangling_fraction=0.1, seed=0),
        dict(n=10, avg_out_degree=-1.0, dangling_fraction=0.1, seed=0),
    ])
    def test_bad_parameters(self, kwargs):
        with pytest.raises(ParameterError):
            generate_synthetic(**kwargs)

    @given(st.integers(1, 60), st.floats(0, 6), st.floats(0, 1), st.integers(0, 2**32))
    def test_pure_function(self, n, avg, frac, seed):
        assert generate_synthetic(n, avg, frac, seed) == generate_synthetic(n, avg, frac, seed)


class TestPartition:
    @pytest.mark.parametrize("n,p,bounds", [
        (10, 2, [0, 5, 10]),
        (7, 3, [0, 3, 5, 7]),
        (5, 1, [0, 5]),
    ])
    def test_examples(self, n, p, bounds):
        assert list(partition_rows(n, p).bounds) == bounds

    @pytest.mark.parametrize("n,p", [(3, 4), (3, 0)])
    def test_invalid(self, n, p):
        with pytest.raises(ParameterError):
            partition_rows(n, p)

    @given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
    def test_cover_and_balance(self, np_):
        n, p = np_
        part = partition_rows(n, p)
        rows = [r for i in range(p) for r in part.block(i)]
        assert rows == list(range(n))
        sizes = part.sizes()
        assert max(sizes) - min(sizes) <= 1
        assert sizes == sorted(sizes, reverse=True)
        assert all(part.owner_of(r) == i for i in range(p) for r in part.block(i))


class TestTransitionBlock:
    def test_two_cycle(self, two_cycle):
        b = build_transition_block(two_cycle, partition_rows(2, 1), 0)
        np.testing.assert_array_equal(b.to_dense(), [[0, 1], [1, 0]])

    def test_dangling_column_empty(self, single_edge):
        b = build_transition_block(single_edge, partition_rows(2, 1), 0)
        np.testing.assert_array_equal(b.to_dense(), [[0, 0], [1, 0]])
        assert b.dangling.tolist() == [False, True]

    def test_g3_column_zero(self, g3):
        b = build_transition_block(g3, partition_rows(3, 1), 0)
        dense = b.to_dense()
        assert dense[1, 0] == 0.5 and dense[2, 0] == 0.5

    def test_owner_out_of_range(self, g3):
        with pytest.raises(ParameterError):
            build_transition_block(g3, partition_rows(3, 2), 2)

    def test_rows_match_partition(self, g3):
        part = partition_rows(3, 2)
        blocks = build_all_blocks(g3, part)
        assert [b.row_range for b in blocks] == [(0, 2), (2, 3)]
        full = build_transition_block(g3, partition_rows(3, 1), 0).to_dense()
        np.testing.assert_array_equal(np.vstack([b.to_dense() for b in blocks]), full)

    @given(graphs(), st.integers(1, 8))
    def test_column_sums(self, g, p):
        p = min(p, g.n)
        part = partition_rows(g.n, p)
        sums = np.zeros(g.n)
        for b in build_all_blocks(g, part):
            np.add.at(sums, b.indices, b.data)
        expected = (g.out_degree > 0).astype(float)
        np.testing.assert_allclose(sums, expected, rtol=0, atol=1e-12)

    def test_immutable(self, g3):
        with pytest.raises(ValueError):
            g3.indices[0] = 2
        assert isinstance(g3, AdjacencyGraph)
