"""Tests for the abstract lattices, objects and store in notjsAbsInt.domains."""

import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from notjsAbsInt.domains import (BV_BOT, NUM_BOT, NUM_TOP, STR_BOT, STR_SNOTNUM,
                                 STR_SNOTNUMNORSPL, STR_SNOTSPL, STR_SNUM, STR_SSPL, STR_TOP,
                                 UNDEF_BV, AbsAddr, AbsNum, AbsObject, AbsStore, AbsStr, BValue,
                                 FrozenMap, alpha, bool_join, bool_leq, bv_addr, bv_num, bv_str,
                                 classify_str, num_join, num_leq, obj_delete, obj_enumerate,
                                 obj_join, obj_leq, obj_lookup, obj_update, str_concat, str_join,
                                 str_leq, str_member, to_bool, to_num, to_str)
from notjsAbsInt.utils import NULL, UNDEF

SAMPLE_STRINGS = ("", "0", "3.5", "NaN", "Infinity", "length", "valueOf", "x", "03", "-0")
SAMPLE_NUMBERS = (0.0, -0.0, 1.0, 3.5, math.nan, math.inf)

abs_nums = st.one_of(st.just(NUM_BOT), st.just(NUM_TOP),
                     st.sampled_from(SAMPLE_NUMBERS).map(AbsNum.const))
abs_strs = st.one_of(
    st.sampled_from((STR_BOT, STR_SNUM, STR_SSPL, STR_SNOTSPL, STR_SNOTNUM, STR_TOP)),
    st.sampled_from(SAMPLE_STRINGS).map(AbsStr.of),
)
addrs = st.sampled_from([AbsAddr(i, (), "object") for i in range(3)])
bvalues = st.builds(BValue, abs_nums, st.frozensets(st.booleans()), abs_strs,
                    st.frozensets(addrs), st.booleans(), st.booleans())


class TestLatticeLaws:
    """Join is the least upper bound under leq, for numbers, strings and base values."""

    @given(abs_nums, abs_nums)
    def test_num_join(self, a, b):
        j = num_join(a, b)
        assert num_leq(a, j) and num_leq(b, j)
        assert num_join(b, a) == j

    @given(abs_strs, abs_strs)
    def test_str_join(self, a, b):
        j = str_join(a, b)
        assert str_leq(a, j) and str_leq(b, j)
        assert str_join(b, a) == j
        assert str_join(a, a) == a

    @given(bvalues, bvalues, bvalues)
    def test_bvalue_join(self, a, b, c):
        j = a.join(b)
        assert a.leq(j) and b.leq(j)
        assert j == b.join(a)
        assert a.join(b.join(c)) == j.join(c)
        if a.leq(c) and b.leq(c):
            assert j.leq(c)

    @given(bvalues)
    def test_bottom(self, a):
        assert BV_BOT.leq(a)
        assert a.join(BV_BOT) == a

    @given(st.sampled_from(SAMPLE_STRINGS), abs_strs)
    def test_member_agrees_with_leq(self, s, a):
        assert str_member(a, s) == str_leq(AbsStr.of(s), a)


# finite alphabets for the exhaustive law checks
NUM_ALPHABET = [NUM_BOT, NUM_TOP] + [AbsNum.const(x) for x in SAMPLE_NUMBERS + (-1.0, 2.0)]
BOOL_ALPHABET = [frozenset(), frozenset({True}), frozenset({False}), frozenset({True, False})]
STR_ALPHABET = [STR_BOT, STR_SNUM, STR_SNOTNUMNORSPL, STR_SSPL, STR_SNOTSPL, STR_SNOTNUM,
                STR_TOP] + [AbsStr.of(s) for s in SAMPLE_STRINGS + ("1", "2", "foo", "bar")]
BV_ALPHABET = [
    BValue(num, frozenset(), s, frozenset(), *extra[:2]).join(extra[2])
    for num in (NUM_BOT, AbsNum.const(1.0), AbsNum.const(math.nan), NUM_TOP)
    for s in (STR_BOT, AbsStr.of("0"), AbsStr.of("length"), STR_SNOTSPL, STR_TOP)
    for extra in ((False, False, BV_BOT), (False, False, BValue(bools=frozenset({True}))),
                  (True, True, BV_BOT), (False, False, bv_addr(AbsAddr(0, (), "object"))),
                  (False, True, BValue(addrs=frozenset({AbsAddr(0, (), "object"),
                                                        AbsAddr(1, (), "array")}))))
]

LATTICES = {
    "num": (NUM_ALPHABET, num_join, num_leq),
    "bool": (BOOL_ALPHABET, bool_join, bool_leq),
    "str": (STR_ALPHABET, str_join, str_leq),
    "bvalue": (BV_ALPHABET, BValue.join, BValue.leq),
}


@pytest.mark.parametrize("name", sorted(LATTICES))
class TestExhaustiveLatticeLaws:
    """Every pair and triple of a finite alphabet obeys the lattice laws."""

    def test_pairs(self, name):
        alphabet, join, leq = LATTICES[name]
        for a, b in itertools.product(alphabet, repeat=2):
            j = join(a, b)
            assert join(b, a) == j, f"{name}: {a!r} join {b!r} not commutative"
            assert leq(a, j) and leq(b, j), f"{name}: {j!r} is not an upper bound"
            assert leq(a, b) == (j == b), f"{name}: leq disagrees with join on {a!r}, {b!r}"
            if leq(a, b) and leq(b, a):
                assert a == b, f"{name}: {a!r} and {b!r} are mutually below"
        for a in alphabet:
            assert join(a, a) == a and leq(a, a)

    def test_triples(self, name):
        alphabet, join, leq = LATTICES[name]
        if name == "bvalue":
            alphabet = alphabet[::2]
        for a, b, c in itertools.product(alphabet, repeat=3):
            ab = join(a, b)
            assert join(ab, c) == join(a, join(b, c)), f"{name}: join not associative"
            if leq(a, c) and leq(b, c):
                assert leq(ab, c), f"{name}: {ab!r} is not the least upper bound"
            if leq(a, b) and leq(b, c):
                assert leq(a, c), f"{name}: leq not transitive"


def test_base_value_alphabet_size():
    assert len(BV_ALPHABET) ** 2 >= 10_000
    assert len(BV_ALPHABET[::2]) ** 3 >= 100_000


# Hasse diagram of the string lattice: every element with the elements strictly above it
STRING_ORDER = {
    "Bot": {"1", "2", "foo", "bar", "valueOf", "SNum", "SNotNumNorSpl", "SSpl", "SNotSpl",
            "SNotNum", "Top"},
    "1": {"SNum", "SNotSpl", "Top"},
    "2": {"SNum", "SNotSpl", "Top"},
    "foo": {"SNotNumNorSpl", "SNotSpl", "SNotNum", "Top"},
    "bar": {"SNotNumNorSpl", "SNotSpl", "SNotNum", "Top"},
    "valueOf": {"SSpl", "SNotNum", "Top"},
    "SNum": {"SNotSpl", "Top"},
    "SNotNumNorSpl": {"SNotSpl", "SNotNum", "Top"},
    "SSpl": {"SNotNum", "Top"},
    "SNotSpl": {"Top"},
    "SNotNum": {"Top"},
    "Top": set(),
}
STRING_ELEMENTS = {
    "Bot": STR_BOT, "SNum": STR_SNUM, "SNotNumNorSpl": STR_SNOTNUMNORSPL, "SSpl": STR_SSPL,
    "SNotSpl": STR_SNOTSPL, "SNotNum": STR_SNOTNUM, "Top": STR_TOP,
    **{s: AbsStr.of(s) for s in ("1", "2", "foo", "bar", "valueOf")},
}


def _up(name):
    return STRING_ORDER[name] | {name}


class TestStringLatticeTable:
    """The string lattice matches its Hasse diagram on every pair of named elements."""

    def test_leq_table(self):
        for a, b in itertools.product(STRING_ORDER, repeat=2):
            expected = b in _up(a)
            assert str_leq(STRING_ELEMENTS[a], STRING_ELEMENTS[b]) == expected, f"{a} <= {b}"

    def test_join_table(self):
        for a, b in itertools.product(STRING_ORDER, repeat=2):
            common = _up(a) & _up(b)
            (least,) = [c for c in common if common <= _up(c)]
            joined = str_join(STRING_ELEMENTS[a], STRING_ELEMENTS[b])
            assert joined == STRING_ELEMENTS[least], f"{a} join {b} is {joined!r}, not {least}"

    @pytest.mark.parametrize("a, b, expected", [
        ("1", "2", "SNum"),
        ("foo", "bar", "SNotNumNorSpl"),
        ("valueOf", "foo", "SNotNum"),
        ("SNum", "SSpl", "Top"),
    ])
    def test_named_joins(self, a, b, expected):
        assert str_join(STRING_ELEMENTS[a], STRING_ELEMENTS[b]) == STRING_ELEMENTS[expected]

    @given(st.text(max_size=8) | st.sampled_from(SAMPLE_STRINGS + ("valueOf", "-1e+21")))
    def test_every_string_has_exactly_one_category(self, s):
        category = classify_str(s)
        assert category in ("numeric", "special", "other")
        singles = [STR_SNUM, STR_SSPL, STR_SNOTNUMNORSPL]
        assert [str_member(x, s) for x in singles].count(True) == 1
        assert str_leq(AbsStr.of(s), STR_TOP)


class TestStringDomain:
    """Test class for string categories and abstract concatenation."""

    @pytest.mark.parametrize("s, category", [
        ("0", "numeric"),
        ("3.5", "numeric"),
        ("NaN", "numeric"),
        ("Infinity", "numeric"),
        ("length", "special"),
        ("valueOf", "special"),
        ("", "other"),
        ("03", "other"),
        ("-0", "other"),
        ("foo", "other"),
    ])
    def test_classify(self, s, category):
        assert classify_str(s) == category

    def test_named_elements(self):
        assert AbsStr.of("x").kind == "Const"
        assert STR_SNOTSPL.kind == "SNotSpl"
        assert str_join(AbsStr.of("1"), AbsStr.of("2")) == STR_SNUM
        assert str_join(AbsStr.of("1"), AbsStr.of("x")) == STR_SNOTSPL
        assert str_join(AbsStr.of("1"), AbsStr.of("length")) == STR_TOP

    def test_concat_constants_is_exact(self):
        assert str_concat(AbsStr.of("1"), AbsStr.of("2")) == AbsStr.of("12")
        assert str_concat(AbsStr.of(""), STR_SNUM) == STR_SNUM

    def test_concat_of_numbers_is_never_special(self):
        assert str_concat(STR_SNUM, STR_SNUM) == STR_SNOTSPL

    def test_concat_may_build_a_special_name(self):
        s = str_concat(AbsStr.of("value"), AbsStr(frozenset({"other"})))
        assert str_member(s, "valueOf")
        assert not str_member(s, "12")


class TestConversions:
    def test_alpha_of_primitives(self):
        assert alpha(2.0) == bv_num(2.0)
        assert alpha("a") == bv_str("a")
        assert alpha(NULL).null and alpha(UNDEF) == UNDEF_BV

    def test_to_num_and_to_str(self):
        v = bv_str("3").join(BValue(bools=frozenset({True})))
        assert to_num(v) == NUM_TOP
        assert to_num(bv_str("length")) != NUM_TOP
        assert math.isnan(to_num(UNDEF_BV).value)
        assert to_str(bv_num(1.0)) == AbsStr.of("1")
        assert to_str(BValue(num=NUM_TOP)) == STR_SNUM

    def test_to_bool(self):
        assert to_bool(bv_str("")) == frozenset({False})
        assert to_bool(BValue(string=STR_SNUM)) == frozenset({True})
        assert to_bool(BValue(string=STR_TOP)) == frozenset({True, False})
        assert to_bool(bv_addr(AbsAddr(1, (), "object"))) == frozenset({True})


class TestObjectsAndStore:
    """Test class for property reads and writes, strong and weak updates."""

    def setup_method(self):
        self.proto_addr = AbsAddr(-2, (), "object")
        self.addr = AbsAddr(5, (), "object")
        self.array_addr = AbsAddr(6, (), "array")
        proto = AbsObject(tag="object", props=FrozenMap({"p": bv_num(9.0)}),
                          present=frozenset({"p"}))
        obj = AbsObject(tag="object", props=FrozenMap({"a": bv_num(1.0)}),
                        present=frozenset({"a"}), proto=bv_addr(self.proto_addr))
        array = AbsObject(tag="array", props=FrozenMap({"length": bv_num(0.0)}),
                          present=frozenset({"length"}), hidden=frozenset({"length"}),
                          proto=bv_addr(self.proto_addr))
        self.store = (AbsStore().alloc(self.proto_addr, proto).alloc(self.addr, obj)
                      .alloc(self.array_addr, array))

    def test_lookup_through_prototype(self):
        v, found = obj_lookup(self.store, [self.addr], AbsStr.of("p"))
        assert v == bv_num(9.0) and found == frozenset({True})
        v, found = obj_lookup(self.store, [self.addr], AbsStr.of("missing"))
        assert v == UNDEF_BV and found == frozenset({False})

    def test_strong_update(self):
        store, flags = obj_update(self.store, [self.addr], AbsStr.of("a"), bv_num(2.0))
        assert flags == frozenset()
        assert store.obj(self.addr).get("a") == bv_num(2.0)

    def test_weak_update_on_summary(self):
        store = self.store.alloc(self.addr, self.store.obj(self.addr))
        assert not store.is_single(self.addr)
        store, _ = obj_update(store, [self.addr], AbsStr.of("a"), bv_num(2.0))
        assert store.obj(self.addr).get("a") == bv_num(1.0).join(bv_num(2.0))

    def test_weak_update_on_unknown_key(self):
        store, _ = obj_update(self.store, [self.addr], STR_SNUM, bv_str("v"))
        o = store.obj(self.addr)
        assert o.get("7") == bv_str("v")
        assert o.get("a") == bv_num(1.0), "a numeric key never touches other names"

    def test_array_length_range_error(self):
        _, flags = obj_update(self.store, [self.array_addr], AbsStr.of("length"), bv_str("3.5"))
        assert flags == frozenset({"possibleRangeError"})
        store, flags = obj_update(self.store, [self.array_addr], AbsStr.of("3"), bv_num(1.0))
        assert flags == frozenset()
        assert store.obj(self.array_addr).get("length") == bv_num(4.0)

    def test_delete_and_enumerate(self):
        store, result = obj_delete(self.store, [self.addr], AbsStr.of("a"))
        assert result == frozenset({True})
        assert "a" not in store.obj(self.addr).present
        definite, possible = obj_enumerate(self.store, [self.addr])
        assert definite == frozenset({"a"})
        assert AbsStr.of("p") in possible

    def test_hidden_property_is_not_deletable(self):
        _, result = obj_delete(self.store, [self.array_addr], AbsStr.of("length"))
        assert result == frozenset({False})

    def test_object_join(self):
        a = self.store.obj(self.addr)
        b = AbsObject(tag="object", props=FrozenMap({"b": bv_num(2.0)}),
                      present=frozenset({"b"}), proto=a.proto)
        j = obj_join(a, b)
        assert obj_leq(a, j) and obj_leq(b, j)
        assert j.present == frozenset()
        assert j.get("a") == bv_num(1.0)

    def test_store_leq_tracks_summaries(self):
        twice = self.store.alloc(self.addr, self.store.obj(self.addr))
        assert self.store.leq(twice)
        assert not twice.leq(self.store)
