"""Instruction generation: vocabulary, property selection, feedback rules."""

from __future__ import annotations

import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pentogrip.board import Board, Color, PieceSymbol, Region, Shape
from pentogrip.language import (
    BOS_ID,
    DIST_THRESHOLD,
    EOS_ID,
    MAX_TOKENS,
    PAD_ID,
    TIME_THRESHOLD,
    UNK_ID,
    VOCABULARY,
    LanguageError,
    Property,
    PropertyKind,
    Utterance,
    UtteranceKind,
    detokenize,
    feedback,
    ia_select,
    make_teacher,
    parse_order,
    realize,
    symbol_property,
    tokenize,
)

SYMBOLS = [
    PieceSymbol(shape, color, region)
    for shape in Shape
    for color in Color
    for region in Region
]

symbol_st = st.sampled_from(SYMBOLS)
order_st = st.sampled_from(["CSP", "CPS", "PCS", "PSC", "SCP", "SPC"])


# ------------------------------------------------------------- vocabulary


def test_vocabulary_has_exactly_33_entries():
    assert len(VOCABULARY) == 33
    assert len(set(VOCABULARY)) == 33


def test_special_token_ids():
    assert VOCABULARY[PAD_ID] == "<pad>"
    assert VOCABULARY[BOS_ID] == "<s>"
    assert VOCABULARY[EOS_ID] == "<e>"
    assert VOCABULARY[UNK_ID] == "<unk>"


def test_vocabulary_covers_all_surface_words():
    words = set(VOCABULARY)
    for color in Color:
        assert color.value in words
    for shape in Shape:
        assert shape.value.lower() in words
    for region in Region:
        for word in region.value.split():
            assert word in words
    for word in ("take", "the", "piece", "at", "this", "way", "yes"):
        assert word in words


def test_no_not_pair_kept_within_33():
    # The no/not lexical pair is what lands the count at exactly 33; the
    # feedback surface form "Not" must tokenize in-vocabulary.
    assert "no" in VOCABULARY and "not" in VOCABULARY
    assert UNK_ID not in tokenize("Not this way")[:4]


def test_tokenize_brackets_and_pads():
    tokens = tokenize("Take the red T")
    assert len(tokens) == MAX_TOKENS
    assert tokens[0] == BOS_ID
    body_end = tokens.index(EOS_ID)
    assert all(t == PAD_ID for t in tokens[body_end + 1 :])


def test_tokenize_is_case_insensitive():
    assert tokenize("TAKE THE RED T") == tokenize("take the red t")


def test_unknown_word_maps_to_unk():
    tokens = tokenize("take the gizmo")
    assert UNK_ID in tokens


def test_detokenize_round_trip():
    for text in ("Take the red T", "Not this way", "Yes this piece"):
        assert detokenize(tokenize(text)) == text.lower()


@given(symbol_st, st.lists(symbol_st, max_size=17), order_st)
def test_realized_re_tokens_round_trip(target, distractors, order):
    utterance = realize(ia_select(target, distractors, parse_order(order)))
    assert detokenize(utterance.tokens) == utterance.text.lower()
    assert UNK_ID not in utterance.tokens


# ---------------------------------------------------------------- orders


def test_parse_order_accepts_dashes_and_case():
    assert parse_order("P-C-S") == parse_order("pcs")
    assert parse_order("CSP") == (
        PropertyKind.COLOR,
        PropertyKind.SHAPE,
        PropertyKind.POSITION,
    )


@pytest.mark.parametrize("bad", ["", "PC", "PPC", "XYZ", "PCSS"])
def test_parse_order_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_order(bad)


# ------------------------------------------------------------- selection


def brute_force_filter(
    scene: list[PieceSymbol], props: list[Property]
) -> list[PieceSymbol]:
    """Reference filter: pieces matching every selected property."""
    return [
        s
        for s in scene
        if all(symbol_property(s, p.kind) == p.value for p in props)
    ]


def test_single_distinguishing_property_suffices():
    target = PieceSymbol(Shape.T, Color.BLUE, Region.TOP_LEFT)
    distractors = [
        PieceSymbol(Shape.T, Color.RED, Region.TOP_LEFT),
        PieceSymbol(Shape.T, Color.GREEN, Region.TOP_LEFT),
    ]
    props = ia_select(target, distractors, parse_order("CSP"))
    assert [p.kind for p in props] == [PropertyKind.COLOR]


def test_preference_order_changes_selection():
    # Distractors differ from the target in both color and shape, so the
    # most preferred property alone settles it — and which one is kept
    # depends on the order.
    target = PieceSymbol(Shape.T, Color.BLUE, Region.TOP_LEFT)
    distractors = [
        PieceSymbol(Shape.W, Color.RED, Region.TOP_LEFT),
        PieceSymbol(Shape.U, Color.GREEN, Region.BOTTOM_RIGHT),
    ]
    color_first = ia_select(target, distractors, parse_order("CSP"))
    shape_first = ia_select(target, distractors, parse_order("SCP"))
    assert [p.kind for p in color_first] == [PropertyKind.COLOR]
    assert [p.kind for p in shape_first] == [PropertyKind.SHAPE]


def test_no_distractors_returns_all_three():
    target = PieceSymbol(Shape.F, Color.BROWN, Region.BOTTOM_CENTER)
    props = ia_select(target, [], parse_order("PCS"))
    assert {p.kind for p in props} == set(PropertyKind)


def test_identical_distractor_returns_all_three():
    target = PieceSymbol(Shape.F, Color.BROWN, Region.BOTTOM_CENTER)
    props = ia_select(target, [target], parse_order("PCS"))
    assert {p.kind for p in props} == set(PropertyKind)


@given(symbol_st, st.lists(symbol_st, max_size=17), order_st)
def test_ia_matches_brute_force_filter(target, distractors, order):
    props = ia_select(target, distractors, parse_order(order))
    # Target always matches its own properties.
    assert brute_force_filter([target], props) == [target]
    solvable = [d for d in distractors if d != target]
    if len(solvable) == len(distractors):
        # IA empties the distractor set, so the conjunction must single
        # out the target within the full scene.
        survivors = brute_force_filter(distractors, props)
        assert survivors == []


@given(symbol_st, st.lists(symbol_st, max_size=17), order_st)
def test_ia_keeps_only_useful_properties(target, distractors, order):
    # Re-run the selection loop, checking each kept property excluded
    # at least one distractor still in play at that moment.
    props = ia_select(target, distractors, parse_order(order))
    if {p.kind for p in props} == set(PropertyKind) and not brute_force_filter(
        distractors, []
    ):
        return  # all-three fallback for the empty scene
    kinds = [p.kind for p in props]
    remaining = list(distractors)
    for kind in parse_order(order):
        value = symbol_property(target, kind)
        excluded = [d for d in remaining if symbol_property(d, kind) != value]
        if excluded:
            assert kind in kinds
            remaining = [d for d in remaining if symbol_property(d, kind) == value]
    if not any(
        symbol_property(d, k) != symbol_property(target, k)
        for d in distractors
        for k in PropertyKind
    ) or not distractors:
        assert set(kinds) == set(PropertyKind)


# ------------------------------------------------------------ realization


@pytest.mark.parametrize(
    "kinds,expected",
    [
        ((PropertyKind.COLOR,), "Take the green piece"),
        ((PropertyKind.SHAPE,), "Take the W"),
        ((PropertyKind.POSITION,), "Take the piece at right center"),
        ((PropertyKind.COLOR, PropertyKind.SHAPE), "Take the green W"),
        (
            (PropertyKind.COLOR, PropertyKind.POSITION),
            "Take the green piece at right center",
        ),
        (
            (PropertyKind.SHAPE, PropertyKind.POSITION),
            "Take the W at right center",
        ),
        (
            (PropertyKind.COLOR, PropertyKind.SHAPE, PropertyKind.POSITION),
            "Take the green W at right center",
        ),
    ],
)
def test_seven_templates(kinds, expected):
    symbol = PieceSymbol(Shape.W, Color.GREEN, Region.RIGHT_CENTER)
    props = [Property(kind, symbol_property(symbol, kind)) for kind in kinds]
    assert realize(props).text == expected


def test_surface_order_is_fixed_regardless_of_preference():
    symbol = PieceSymbol(Shape.W, Color.GREEN, Region.RIGHT_CENTER)
    props = [
        Property(PropertyKind.POSITION, symbol.region),
        Property(PropertyKind.SHAPE, symbol.shape),
        Property(PropertyKind.COLOR, symbol.color),
    ]
    assert realize(props).text == "Take the green W at right center"


def test_realize_rejects_empty_and_duplicates():
    with pytest.raises(LanguageError):
        realize([])
    with pytest.raises(LanguageError):
        realize(
            [
                Property(PropertyKind.COLOR, Color.RED),
                Property(PropertyKind.COLOR, Color.BLUE),
            ]
        )


@given(symbol_st, st.lists(symbol_st, max_size=17), order_st)
def test_every_instantiation_fits_eleven_tokens(target, distractors, order):
    utterance = realize(ia_select(target, distractors, parse_order(order)))
    tokens = utterance.tokens
    assert len(tokens) == MAX_TOKENS
    # The padded width is the cap: the sentence incl. <s>/<e> never spills.
    assert tokens[-1] == PAD_ID or tokens[-1] == EOS_ID


def test_longest_template_exactly_eleven():
    # 3-property template with a two-word position fills the budget:
    # <s> take the green w at right center <e> = 9 + room for nothing else.
    symbol = PieceSymbol(Shape.W, Color.GREEN, Region.RIGHT_CENTER)
    props = [Property(k, symbol_property(symbol, k)) for k in PropertyKind]
    tokens = realize(props).tokens
    used = len([t for t in tokens if t != PAD_ID])
    assert used <= MAX_TOKENS
    assert used == 9


# -------------------------------------------------------------- feedback


def place_target(anchor=(4, 4)) -> "Piece":
    board = Board(20, 20)
    pid = board.place(PieceSymbol(Shape.X, Color.RED, Region.TOP_LEFT), anchor, 0)
    return board.pieces[pid]


def fresh_teacher(start=(10, 10), enabled=True):
    target = PieceSymbol(Shape.X, Color.RED, Region.TOP_LEFT)
    distractor = PieceSymbol(Shape.W, Color.BLUE, Region.BOTTOM_RIGHT)
    return make_teacher(target, [distractor], parse_order("PCS"), start, enabled)


def test_thresholds():
    assert DIST_THRESHOLD == 3.0
    assert TIME_THRESHOLD == 6


def test_piece_contact_beats_direction():
    teacher = fresh_teacher()
    target = place_target()
    # Move far from the anchor AND onto the target: piece feedback wins.
    utterance = feedback(teacher, (4, 4), target.id, target)
    assert utterance is not None and utterance.text == "Yes this piece"
    assert utterance.kind is UtteranceKind.PIECE_FEEDBACK


def test_wrong_piece_contact():
    teacher = fresh_teacher()
    target = place_target()
    utterance = feedback(teacher, (15, 15), 7, target)
    assert utterance is not None and utterance.text == "Not this piece"


def test_piece_feedback_fires_every_step_on_piece():
    teacher = fresh_teacher()
    target = place_target()
    for _ in range(5):
        utterance = feedback(teacher, (4, 4), target.id, target)
        assert utterance is not None and utterance.text == "Yes this piece"


def test_direction_feedback_requires_strict_displacement():
    teacher = fresh_teacher(start=(10, 10))
    target = place_target()
    # Exactly 3.0 away: no emission (strict >).
    assert feedback(teacher, (13, 10), None, target) is None
    assert teacher.g_fb_last == (10, 10)
    # 4 away and closer to the target anchor: positive direction feedback.
    utterance = feedback(teacher, (6, 10), None, target)
    assert utterance is not None and utterance.text == "Yes this way"
    assert teacher.g_fb_last == (6, 10)


def test_direction_sentiment_matches_closer_predicate():
    teacher = fresh_teacher(start=(10, 10))
    target = place_target(anchor=(4, 4))
    utterance = feedback(teacher, (14, 10), None, target)  # moved away
    assert utterance is not None and utterance.text == "Not this way"


def test_repeat_fires_on_sixth_silent_step():
    teacher = fresh_teacher()
    target = place_target()
    for i in range(TIME_THRESHOLD - 1):
        assert feedback(teacher, (10, 10), None, target) is None, f"step {i}"
    utterance = feedback(teacher, (10, 10), None, target)
    assert utterance is not None
    assert utterance.kind is UtteranceKind.REPEATED_RE
    assert utterance.text == teacher.initial_re.text


def test_any_emission_resets_silence_and_anchor():
    teacher = fresh_teacher()
    target = place_target()
    for _ in range(3):
        feedback(teacher, (10, 10), None, target)
    assert teacher.silence == 3
    utterance = feedback(teacher, (4, 4), target.id, target)
    assert utterance is not None
    assert teacher.silence == 0 and teacher.g_fb_last == (4, 4)
    # The silent-gap clock starts over.
    for _ in range(TIME_THRESHOLD - 1):
        assert feedback(teacher, (4, 4), target.id, target) is not None


def test_feedback_disabled_never_speaks():
    teacher = fresh_teacher(enabled=False)
    target = place_target()
    for pos in [(4, 4), (18, 18), (10, 10)] * 5:
        assert feedback(teacher, pos, target.id if pos == (4, 4) else None, target) is None


def test_repeated_re_keeps_text_but_marks_kind():
    teacher = fresh_teacher()
    assert teacher.repeat_re.text == teacher.initial_re.text
    assert teacher.repeat_re.tokens == teacher.initial_re.tokens
    assert teacher.repeat_re.kind is UtteranceKind.REPEATED_RE
    assert teacher.initial_re.kind is UtteranceKind.INITIAL_RE


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(st.integers(0, 19), st.integers(0, 19), st.booleans()),
        min_size=1,
        max_size=60,
    )
)
def test_feedback_emission_iff_rule(trajectory):
    """Emission exactly when displacement > 3, on a piece, or 6th silent step."""
    teacher = fresh_teacher(start=(10, 10))
    target = place_target()
    anchor = (10, 10)
    silence = 0
    for x, y, on_piece in trajectory:
        over = target.id if on_piece else None
        expect_emit = (
            on_piece
            or math.dist((x, y), anchor) > DIST_THRESHOLD
            or silence + 1 >= TIME_THRESHOLD
        )
        utterance = feedback(teacher, (x, y), over, target)
        assert (utterance is not None) == expect_emit
        if expect_emit:
            anchor = (x, y)
            silence = 0
        else:
            silence += 1
