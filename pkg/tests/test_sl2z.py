import pytest
from hypothesis import given, settings

from conftest import group_words
from sl2z import (
    IDENTITY, R_MAT, S_MAT, RS_MAT, R2_MAT, ELLIPTIC_REPRESENTATIVES,
    Mat2, GroupWord, parse_word, matrix_to_word, classify, parabolic_normal_form,
    positive_factorization, syllable_form, enumerate_words,
)
from utils import UsageError, WordParseError


def test_parse_word():
    w = parse_word("R S^-1 R^2")
    assert w.letters == (("R", 1), ("S", -1), ("R", 2))
    assert parse_word("RS").letters == (("R", 1), ("S", 1))
    assert parse_word("R^+3").letters == (("R", 3),)
    assert parse_word("").letters == ()
    assert parse_word(" 1 ").letters == ()


@pytest.mark.parametrize("text, position", [("R T", 2), ("R S^x", 4), ("S^", 2), ("R S^-1 *", 7)])
def test_parse_word_reports_position(text, position):
    with pytest.raises(WordParseError) as excinfo:
        parse_word(text)
    assert excinfo.value.position == position
    assert f"位置 {position}" in str(excinfo.value)


def test_word_parse_error_is_usage_error():
    with pytest.raises(UsageError):
        GroupWord.parse("X")


def test_adjacent_letters_merge():
    w = GroupWord((("R", 2), ("R", -2), ("S", 1), ("S", 1)))
    assert w.letters == (("S", 2),)
    assert str(GroupWord((("R", 1), ("R", -1)))) == "1"
    assert str(parse_word("R S^-1 R^2")) == "R S^-1 R^2"
    assert parse_word("R^3 S^-2").length == 5


def test_mat2_requires_unit_determinant():
    with pytest.raises(UsageError):
        Mat2(2, 0, 0, 1)
    assert Mat2.from_rows([[2, 1], [1, 1]]).trace == 3


def test_presentation_relations_hold_in_matrices():
    assert S_MAT.power(4).is_identity()
    assert RS_MAT.power(3).is_identity()
    assert S_MAT.power(2) == -IDENTITY
    assert S_MAT.power(2).is_central()
    assert R2_MAT == RS_MAT.power(2) @ S_MAT
    assert parse_word("S^2 R S").matrix == parse_word("R S S^2").matrix


def test_classify():
    assert str(classify(R_MAT)) == "parabolic"
    assert classify(S_MAT).order == 4
    assert classify(RS_MAT).order == 3
    assert classify(IDENTITY).order == 1
    assert classify(-IDENTITY).order == 2
    assert classify(-R_MAT).kind == "parabolic"
    assert classify(Mat2(2, 1, 1, 1)).kind == "hyperbolic"
    assert str(classify(S_MAT)) == "elliptic(order 4)"


@pytest.mark.parametrize("name", list(ELLIPTIC_REPRESENTATIVES))
def test_elliptic_representatives(name):
    m, order = ELLIPTIC_REPRESENTATIVES[name]
    kind = classify(m)
    assert kind.kind == "elliptic"
    assert kind.order == order


def test_parabolic_normal_form():
    assert parabolic_normal_form(R_MAT.power(3)) == (1, 3)
    assert parabolic_normal_form(R_MAT.power(-2)) == (1, -2)
    assert parabolic_normal_form(-R_MAT) == (-1, 1)
    assert parabolic_normal_form(R2_MAT) == (1, -1)
    with pytest.raises(UsageError):
        parabolic_normal_form(S_MAT)


def test_positive_factorization():
    assert positive_factorization(Mat2(2, 1, 1, 1)) == ["R1", "R2"]
    assert positive_factorization(R_MAT.power(3)) == ["R1"] * 3
    assert positive_factorization(IDENTITY) == []
    with pytest.raises(UsageError):
        positive_factorization(S_MAT)


@settings(max_examples=60, deadline=None)
@given(group_words())
def test_matrix_to_word_round_trip(w):
    assert matrix_to_word(w.matrix).matrix == w.matrix


@settings(max_examples=60, deadline=None)
@given(group_words())
def test_syllable_form_preserves_matrix(w):
    form = syllable_form(w)
    assert form.matrix == w.matrix
    assert form.prefix in (0, 1, 2, 3)
    for i, (a, b) in enumerate(form.syllables):
        assert a in (1, -1)
        last = i == len(form.syllables) - 1
        assert b in ((1, -1, 0) if last else (1, -1))


@settings(max_examples=40, deadline=None)
@given(group_words())
def test_inverse_word(w):
    assert (w * w.inverse()).matrix.is_identity()
    assert w.power(3).matrix == w.matrix.power(3)


def test_syllable_form_of_generators():
    assert syllable_form(parse_word("R")).syllables == ((1, -1),)
    assert syllable_form(parse_word("S^2")).prefix == 2
    assert syllable_form(parse_word("R S R S R S")).count == 0


def test_enumerate_words_is_duplicate_free():
    words = list(enumerate_words(2))
    mats = [w.matrix for w in words]
    assert len(mats) == len(set(mats))
    assert words[0].letters == ()
    assert all(syllable_form(w).count <= 2 for w in words)
    assert list(enumerate_words(2)) == words


def test_enumerate_words_modulo_center():
    keys = set()
    for w in enumerate_words(2, modulo_center=True):
        m = w.matrix
        key = min(m.entries(), (-m).entries())
        assert key not in keys
        keys.add(key)
    assert len(keys) < len(list(enumerate_words(2)))


def test_enumerate_words_rejects_negative():
    with pytest.raises(UsageError):
        list(enumerate_words(-1))
