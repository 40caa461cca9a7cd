"""Teacher language: property selection, templates, feedback and tokens.

The teacher names a target piece by greedily picking properties (color,
shape, position) in a configurable preference order until every distractor
is excluded, then realizes the chosen properties through fixed sentence
templates.  During an episode it monitors the gripper and emits short
feedback utterances; see :func:`feedback` for the exact trigger rules.

The vocabulary is closed and carries stable ids.  Note on the word count:
the surface templates use "not" ("Not this way") while the published word
list names "no"; both forms are kept as entries of one lexical pair, which
is what brings the total to exactly 33 words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .board import Color, Piece, PieceSymbol, Region, Shape

# Feedback trigger thresholds: euclidean displacement from the anchor of the
# last feedback, and steps of silence before the initial expression repeats.
DIST_THRESHOLD = 3.0
TIME_THRESHOLD = 6

MAX_TOKENS = 11

PAD, BOS, EOS, UNK = "<pad>", "<s>", "<e>", "<unk>"

VOCABULARY: tuple[str, ...] = (
    PAD,
    BOS,
    EOS,
    UNK,
    # shapes
    "f", "n", "p", "t", "u", "w", "x", "y", "z",
    # colors
    "red", "yellow", "green", "blue", "purple", "brown",
    # position words, combined into region names such as "top left"
    "left", "right", "top", "bottom", "center",
    # template words; "no" and "not" are one lexical pair, see module docstring
    "take", "the", "piece", "at", "yes", "no", "not", "this", "way",
)

WORD_TO_ID: dict[str, int] = {word: i for i, word in enumerate(VOCABULARY)}
PAD_ID = WORD_TO_ID[PAD]
BOS_ID = WORD_TO_ID[BOS]
EOS_ID = WORD_TO_ID[EOS]
UNK_ID = WORD_TO_ID[UNK]

EMPTY_TOKENS: tuple[int, ...] = (PAD_ID,) * MAX_TOKENS


class LanguageError(Exception):
    """Raised on malformed realization requests."""


def tokenize(text: str) -> tuple[int, ...]:
    """Map an utterance to exactly MAX_TOKENS ids: <s> words <e> then padding.

    Matching is case-insensitive and unknown words become <unk>.  The empty
    string (no utterance) maps to an all-<pad> sequence.
    """
    if not text:
        return EMPTY_TOKENS
    ids = [BOS_ID]
    for word in text.lower().split():
        ids.append(WORD_TO_ID.get(word, UNK_ID))
    ids.append(EOS_ID)
    if len(ids) > MAX_TOKENS:
        raise LanguageError(f"utterance longer than {MAX_TOKENS} tokens: {text!r}")
    ids.extend([PAD_ID] * (MAX_TOKENS - len(ids)))
    return tuple(ids)


def detokenize(tokens: tuple[int, ...]) -> str:
    """Inverse of :func:`tokenize` up to padding and case."""
    words = []
    for tid in tokens:
        if tid in (PAD_ID, BOS_ID, EOS_ID):
            continue
        words.append(VOCABULARY[tid])
    return " ".join(words)


def write_vocabulary(path: str) -> None:
    """Export the vocabulary as a numbered plain-text word list."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, word in enumerate(VOCABULARY):
            fh.write(f"{i}\t{word}\n")


class PropertyKind(str, Enum):
    COLOR = "color"
    SHAPE = "shape"
    POSITION = "position"


@dataclass(frozen=True, slots=True)
class Property:
    """One selected property of the target piece."""

    kind: PropertyKind
    value: Color | Shape | Region


_KIND_BY_LETTER = {
    "C": PropertyKind.COLOR,
    "S": PropertyKind.SHAPE,
    "P": PropertyKind.POSITION,
}

PREFERENCE_ORDER_CODES = ("CSP", "CPS", "PCS", "PSC", "SCP", "SPC")


def parse_order(code: str) -> tuple[PropertyKind, PropertyKind, PropertyKind]:
    """Parse a preference order code such as "PCS" or "P-C-S"."""
    letters = code.replace("-", "").upper()
    if sorted(letters) != ["C", "P", "S"]:
        raise ValueError(f"not a preference order: {code!r}")
    return tuple(_KIND_BY_LETTER[ch] for ch in letters)  # type: ignore[return-value]


def symbol_property(symbol: PieceSymbol, kind: PropertyKind) -> Color | Shape | Region:
    if kind is PropertyKind.COLOR:
        return symbol.color
    if kind is PropertyKind.SHAPE:
        return symbol.shape
    return symbol.region


def ia_select(
    target: PieceSymbol,
    distractors: list[PieceSymbol],
    order: tuple[PropertyKind, PropertyKind, PropertyKind],
) -> list[Property]:
    """Select properties that tell the target apart from the distractors.

    Walks the three properties in preference order; a property is kept
    whenever it excludes at least one remaining distractor, and those
    distractors are dropped.  When nothing gets excluded at all (for
    instance there are no distractors, or one shares every property), all
    three properties are returned so the expression is still well formed.
    """
    selected: list[Property] = []
    remaining = list(distractors)
    for kind in order:
        value = symbol_property(target, kind)
        excluded = [d for d in remaining if symbol_property(d, kind) != value]
        if excluded:
            selected.append(Property(kind, value))
            remaining = [d for d in remaining if symbol_property(d, kind) == value]
    if not selected:
        selected = [Property(kind, symbol_property(target, kind)) for kind in order]
    return selected


class UtteranceKind(str, Enum):
    INITIAL_RE = "initial_re"
    DIRECTION_FEEDBACK = "direction_feedback"
    PIECE_FEEDBACK = "piece_feedback"
    REPEATED_RE = "repeated_re"


@dataclass(frozen=True, slots=True)
class Utterance:
    text: str
    tokens: tuple[int, ...]
    kind: UtteranceKind


def _surface(value: Color | Shape | Region) -> str:
    # Shape letters are spoken in upper case, everything else as written.
    return value.value if not isinstance(value, Shape) else value.value.upper()


def realize(props: list[Property]) -> Utterance:
    """Instantiate the sentence template matching the selected properties.

    The surface order is fixed (color before shape before position) no
    matter which preference order produced the selection.
    """
    if not props:
        raise LanguageError("cannot realize an empty property set")
    values: dict[PropertyKind, str] = {}
    for prop in props:
        if prop.kind in values:
            raise LanguageError(f"duplicate property kind: {prop.kind.value}")
        values[prop.kind] = _surface(prop.value)
    color = values.get(PropertyKind.COLOR)
    shape = values.get(PropertyKind.SHAPE)
    position = values.get(PropertyKind.POSITION)

    if color and shape and position:
        text = f"Take the {color} {shape} at {position}"
    elif color and shape:
        text = f"Take the {color} {shape}"
    elif color and position:
        text = f"Take the {color} piece at {position}"
    elif shape and position:
        text = f"Take the {shape} at {position}"
    elif color:
        text = f"Take the {color} piece"
    elif shape:
        text = f"Take the {shape}"
    else:
        text = f"Take the piece at {position}"
    return Utterance(text, tokenize(text), UtteranceKind.INITIAL_RE)


def _feedback_utterance(positive: bool, about_piece: bool) -> Utterance:
    word = "Yes" if positive else "Not"
    noun = "piece" if about_piece else "way"
    kind = UtteranceKind.PIECE_FEEDBACK if about_piece else UtteranceKind.DIRECTION_FEEDBACK
    text = f"{word} this {noun}"
    return Utterance(text, tokenize(text), kind)


_FEEDBACK = {
    (True, True): _feedback_utterance(True, True),
    (False, True): _feedback_utterance(False, True),
    (True, False): _feedback_utterance(True, False),
    (False, False): _feedback_utterance(False, False),
}


@dataclass(slots=True)
class TeacherState:
    """Mutable teacher memory carried across the steps of one episode."""

    order: tuple[PropertyKind, PropertyKind, PropertyKind]
    initial_re: Utterance
    repeat_re: Utterance
    g_fb_last: tuple[int, int]
    silence: int = 0
    feedback_enabled: bool = True


def make_teacher(
    target: PieceSymbol,
    distractors: list[PieceSymbol],
    order: tuple[PropertyKind, PropertyKind, PropertyKind],
    gripper_start: tuple[int, int],
    feedback_enabled: bool = True,
) -> TeacherState:
    """Build the teacher for an episode and generate its initial expression."""
    initial = realize(ia_select(target, distractors, order))
    repeat = Utterance(initial.text, initial.tokens, UtteranceKind.REPEATED_RE)
    return TeacherState(order, initial, repeat, gripper_start, 0, feedback_enabled)


def feedback(
    state: TeacherState,
    gripper: tuple[int, int],
    over_piece: int | None,
    target: Piece,
) -> Utterance | None:
    """Teacher reaction to the gripper after one follower action.

    Emits piece feedback whenever the gripper sits on any piece tile,
    otherwise direction feedback once the gripper has moved strictly more
    than DIST_THRESHOLD away from the position of the last utterance
    (judged against the target's box center).  After TIME_THRESHOLD steps
    without any utterance the initial expression is repeated verbatim.
    Every emission re-anchors the displacement reference and resets the
    silence counter.
    """
    if not state.feedback_enabled:
        return None
    utterance: Utterance | None = None
    if over_piece is not None:
        utterance = _FEEDBACK[(over_piece == target.id, True)]
    elif math.dist(gripper, state.g_fb_last) > DIST_THRESHOLD:
        closer = math.dist(gripper, target.anchor) < math.dist(
            state.g_fb_last, target.anchor
        )
        utterance = _FEEDBACK[(closer, False)]
    else:
        state.silence += 1
        if state.silence >= TIME_THRESHOLD:
            utterance = state.repeat_re
    if utterance is not None:
        state.g_fb_last = gripper
        state.silence = 0
    return utterance
