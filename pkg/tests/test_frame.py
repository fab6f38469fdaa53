import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belfusion import (
    ParseError,
    ValidationError,
    atom,
    bottom,
    dsm_cardinality,
    enumerate_dsm_lattice,
    format_element,
    free_model,
    hybrid_model,
    is_empty_under,
    join,
    make_frame,
    meet,
    parse_element,
    parse_model_spec,
    shafer_model,
    top,
    union_decomposition,
)

from oracle import closure_of_atoms, to_prop, union_decomposition_prop


class TestMakeFrame:
    def test_singleton(self):
        frame = make_frame(["A"])
        assert frame.n == 1
        assert len(enumerate_dsm_lattice(frame)) == 2

    def test_two_classes_indexed(self):
        frame = make_frame(["rock", "sand"])
        assert frame.n == 2
        assert frame.index("rock") == 0
        assert frame.index("sand") == 1

    def test_seven_classes_power_set_mode(self):
        frame = make_frame(list("ABCDEFG"))
        assert frame.n == 7
        # full lattice enumeration is refused, subset-style work is fine
        with pytest.raises(ValidationError):
            enumerate_dsm_lattice(frame)
        model = shafer_model(frame)
        assert dsm_cardinality(top(frame), model) == 7

    def test_sixteen_class_cap(self):
        frame = make_frame([f"c{i}" for i in range(16)])
        model = shafer_model(frame)
        assert dsm_cardinality(top(frame), model) == 16
        assert dsm_cardinality(atom(frame, 5), model) == 1
        with pytest.raises(ValidationError):
            make_frame([f"c{i}" for i in range(17)])

    def test_duplicate_and_empty_names_rejected(self):
        with pytest.raises(ValidationError):
            make_frame(["A", "A"])
        with pytest.raises(ValidationError):
            make_frame(["A", ""])
        with pytest.raises(ValidationError):
            make_frame([])

    def test_reserved_characters_rejected(self):
        with pytest.raises(ValidationError):
            make_frame(["A|B"])
        with pytest.raises(ValidationError):
            make_frame(["A B"])


class TestLatticeOperations:
    def test_meet_of_atoms_is_single_region(self, frame2):
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert (a & b).bits.bit_count() == 1

    def test_join_of_atoms_is_top(self, frame2):
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert (a | b) == top(frame2)
        assert (a | b).bits.bit_count() == 3

    def test_absorption(self, frame2):
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert meet(a, join(a, b)) == a
        assert join(a, meet(a, b)) == a

    def test_frame_mismatch_rejected(self, frame2, frame3):
        with pytest.raises(ValidationError):
            meet(atom(frame2, 0), atom(frame3, 0))

    def test_lattice_laws_exhaustive_n3(self, frame3):
        elements = enumerate_dsm_lattice(frame3)
        assert len(elements) == 19
        for x, y in itertools.product(elements, repeat=2):
            assert x & y == y & x
            assert x | y == y | x
            assert x & (x | y) == x
            assert x | (x & y) == x
        for x, y, z in itertools.product(elements, repeat=3):
            assert (x & y) & z == x & (y & z)
            assert (x | y) | z == x | (y | z)
            assert x & (y | z) == (x & y) | (x & z)
            assert x | (y & z) == (x | y) & (x | z)


class TestEnumeration:
    @pytest.mark.parametrize("n,expected", [(1, 2), (2, 5), (3, 19)])
    def test_sizes_match_closure_oracle(self, n, expected):
        names = tuple(chr(65 + i) for i in range(n))
        frame = make_frame(names)
        enumerated = {to_prop(e) for e in enumerate_dsm_lattice(frame)}
        oracle = closure_of_atoms(names)
        assert len(enumerated) == len(enumerate_dsm_lattice(frame)) == expected
        assert enumerated == oracle

    def test_n2_canonical_order(self, frame2):
        expressions = [e.expression for e in enumerate_dsm_lattice(frame2)]
        assert expressions == ["~EMPTY~", "A&B", "A", "B", "A|B"]

    def test_n4_size(self):
        frame = make_frame(list("ABCD"))
        assert len(enumerate_dsm_lattice(frame)) == 167

    def test_membership_is_meet_join_reachability(self, frame3):
        lattice = set(enumerate_dsm_lattice(frame3))
        for e in lattice:
            assert e.in_hyper_power_set()
        # a non-up-closed bit pattern is not a generated proposition
        from belfusion.frame import LatticeElement
        bad = LatticeElement(frame3, 0b1)  # region inside A only, nothing above it
        assert not bad.in_hyper_power_set()
        assert bad not in lattice


class TestUnionDecomposition:
    def test_paper_shape_case(self, frame3):
        a, b, c = (atom(frame3, i) for i in range(3))
        y = (a & b) | (a & c)
        assert union_decomposition(y) == a | b | c

    def test_atom_is_fixed_point(self, frame3):
        a = atom(frame3, 0)
        assert union_decomposition(a) == a

    def test_conjunction(self, frame2):
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert union_decomposition(a & b) == a | b

    def test_empty_rejected(self, frame2):
        with pytest.raises(ValidationError):
            union_decomposition(bottom(frame2))

    def test_matches_oracle_and_contains_argument(self, frame3):
        for e in enumerate_dsm_lattice(frame3):
            if e.bits == 0:
                continue
            u = union_decomposition(e)
            assert e.is_subset(u)
            assert to_prop(u) == union_decomposition_prop(frame3.atoms, to_prop(e))
            # the decomposition is a join of atoms
            support = e.atom_support()
            rebuilt = bottom(frame3)
            for i in range(frame3.n):
                if support >> i & 1:
                    rebuilt = rebuilt | atom(frame3, i)
            assert u == rebuilt


class TestConstraintModels:
    def test_shafer_excludes_intersections(self, frame2):
        model = shafer_model(frame2)
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert is_empty_under(a & b, model)
        assert not is_empty_under(a, model)
        assert not is_empty_under(b, model)

    def test_free_keeps_intersections(self, frame2):
        model = free_model(frame2)
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert not is_empty_under(a & b, model)

    def test_bottom_is_always_empty(self, frame2):
        for model in (free_model(frame2), shafer_model(frame2)):
            assert is_empty_under(bottom(frame2), model)

    def test_emptiness_is_monotone(self, frame3):
        model = shafer_model(frame3)
        elements = enumerate_dsm_lattice(frame3)
        for x, y in itertools.product(elements, repeat=2):
            if x.is_subset(y) and is_empty_under(y, model):
                assert is_empty_under(x, model)

    def test_hybrid_declaration_closes_downward(self, frame3):
        a, b, c = (atom(frame3, i) for i in range(3))
        model = hybrid_model(frame3, [a & b])
        assert is_empty_under(a & b, model)
        assert is_empty_under(a & b & c, model)  # subset of the declared element
        assert not is_empty_under(a & c, model)

    def test_model_may_not_kill_an_atom(self, frame2):
        with pytest.raises(ValidationError):
            hybrid_model(frame2, [atom(frame2, 0)])

    def test_parse_model_spec(self, frame3):
        assert parse_model_spec(frame3, "free").dead_mask == 0
        assert parse_model_spec(frame3, "shafer") == shafer_model(frame3)
        hybrid = parse_model_spec(frame3, "hybrid:A&B")
        assert is_empty_under(parse_element(frame3, "A&B"), hybrid)
        assert not is_empty_under(parse_element(frame3, "A&C"), hybrid)
        with pytest.raises(ParseError):
            parse_model_spec(frame3, "bogus")


class TestDsmCardinality:
    def test_free_model_counts_all_regions(self, frame2):
        model = free_model(frame2)
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert dsm_cardinality(a & b, model) == 1
        assert dsm_cardinality(a, model) == 2
        assert dsm_cardinality(a | b, model) == 3

    def test_shafer_model_counts_classically(self, frame2):
        model = shafer_model(frame2)
        a, b = atom(frame2, 0), atom(frame2, 1)
        assert dsm_cardinality(a, model) == 1
        assert dsm_cardinality(a | b, model) == 2

    def test_empty_has_zero(self, frame2):
        assert dsm_cardinality(bottom(frame2), free_model(frame2)) == 0


class TestElementSyntax:
    def test_parse_basic(self, frame3):
        a, b, c = (atom(frame3, i) for i in range(3))
        assert parse_element(frame3, "A") == a
        assert parse_element(frame3, "A&B") == a & b
        assert parse_element(frame3, "A|B") == a | b
        assert parse_element(frame3, "~EMPTY~") == bottom(frame3)

    def test_intersection_binds_tighter(self, frame3):
        a, b, c = (atom(frame3, i) for i in range(3))
        assert parse_element(frame3, "A&B|A&C") == (a & b) | (a & c)
        assert parse_element(frame3, "A|B&C") == a | (b & c)

    def test_parentheses(self, frame3):
        a, b, c = (atom(frame3, i) for i in range(3))
        assert parse_element(frame3, "(A|B)&C") == (a | b) & c

    def test_whitespace_tolerated(self, frame3):
        assert parse_element(frame3, " A & B ") == parse_element(frame3, "A&B")

    def test_errors(self, frame3):
        for bad in ("", "A&", "D", "A||B", "(A", "A)B", "~WRONG~"):
            with pytest.raises(ParseError):
                parse_element(frame3, bad)

    def test_round_trip_all_n3(self, frame3):
        for e in enumerate_dsm_lattice(frame3):
            assert parse_element(frame3, format_element(e)) == e

    @given(st.integers(min_value=0, max_value=18), st.integers(min_value=0, max_value=18))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_of_meets_and_joins(self, i, j):
        frame = make_frame(["A", "B", "C"])
        elements = enumerate_dsm_lattice(frame)
        for combined in (elements[i] & elements[j], elements[i] | elements[j]):
            assert parse_element(frame, format_element(combined)) == combined
