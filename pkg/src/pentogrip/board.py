"""Board geometry: pentomino pieces, tile occupancy, rendering and views.

The board is a ``width x height`` grid of tiles addressed as ``(x, y)`` with
``x`` growing rightwards and ``y`` growing downwards.  Pieces occupy five
adjacent tiles that always fit inside a virtual 5x5 box centered on the
piece's anchor.  Rendering produces a plain RGB image (one pixel per tile,
row-major ``(H, W, 3)`` uint8); the gripper and its two-step trail are drawn
on top of everything else in three grey intensities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

VIEW_SIZE = 11
VIEW_RADIUS = VIEW_SIZE // 2

BACKGROUND_RGB = (255, 255, 255)
PADDING_RGB = (0, 0, 0)

# Gripper trail, newest first: current position, one step back, two steps back.
TRAIL_RGB = ((200, 200, 200), (150, 150, 150), (100, 100, 100))


class BoardError(Exception):
    """Base class for board geometry errors."""


class PlacementError(BoardError):
    """Raised when a piece cannot be placed where requested."""


class CenterRegionError(BoardError):
    """Raised when a tile falls into the unnamed central ninth of the board."""


class Shape(str, Enum):
    """The nine pentomino letters used on the board."""

    F = "F"
    N = "N"
    P = "P"
    T = "T"
    U = "U"
    W = "W"
    X = "X"
    Y = "Y"
    Z = "Z"


class Color(str, Enum):
    """The six piece colors."""

    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"
    BLUE = "blue"
    PURPLE = "purple"
    BROWN = "brown"


COLOR_RGB: dict[Color, tuple[int, int, int]] = {
    Color.RED: (255, 0, 0),
    Color.YELLOW: (255, 255, 0),
    Color.GREEN: (0, 128, 0),
    Color.BLUE: (0, 0, 255),
    Color.PURPLE: (128, 0, 128),
    Color.BROWN: (139, 69, 19),
}


class Region(str, Enum):
    """The eight named board areas; the central ninth has no name."""

    TOP_LEFT = "top left"
    TOP_CENTER = "top center"
    TOP_RIGHT = "top right"
    LEFT_CENTER = "left center"
    RIGHT_CENTER = "right center"
    BOTTOM_LEFT = "bottom left"
    BOTTOM_CENTER = "bottom center"
    BOTTOM_RIGHT = "bottom right"


# (column third, row third) -> region; (1, 1) is the unnamed center.
_THIRDS_TO_REGION: dict[tuple[int, int], Region | None] = {
    (0, 0): Region.TOP_LEFT,
    (1, 0): Region.TOP_CENTER,
    (2, 0): Region.TOP_RIGHT,
    (0, 1): Region.LEFT_CENTER,
    (1, 1): None,
    (2, 1): Region.RIGHT_CENTER,
    (0, 2): Region.BOTTOM_LEFT,
    (1, 2): Region.BOTTOM_CENTER,
    (2, 2): Region.BOTTOM_RIGHT,
}

ROTATIONS = (0, 90, 180, 270)

# Canonical masks, one row string per mask row, 'X' marking occupied cells.
_MASK_ART: dict[Shape, tuple[str, ...]] = {
    Shape.F: (".XX", "XX.", ".X."),
    Shape.N: (".X", ".X", "XX", "X."),
    Shape.P: ("XX", "XX", "X."),
    Shape.T: ("XXX", ".X.", ".X."),
    Shape.U: ("X.X", "XXX"),
    Shape.W: ("X..", "XX.", ".XX"),
    Shape.X: (".X.", "XXX", ".X."),
    Shape.Y: (".X", "XX", ".X", ".X"),
    Shape.Z: ("XX.", ".X.", ".XX"),
}


def _mask_offsets(art: tuple[str, ...]) -> tuple[tuple[int, int], ...]:
    height = len(art)
    width = len(art[0])
    cx, cy = (width - 1) // 2, (height - 1) // 2
    cells = [
        (x - cx, y - cy)
        for y, row in enumerate(art)
        for x, ch in enumerate(row)
        if ch == "X"
    ]
    return tuple(sorted(cells))


def _rotate_cw(offsets: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
    # 90 degrees clockwise on a y-down grid: (dx, dy) -> (-dy, dx).
    return tuple(sorted((-dy, dx) for dx, dy in offsets))


def _build_offset_table() -> dict[tuple[Shape, int], tuple[tuple[int, int], ...]]:
    table: dict[tuple[Shape, int], tuple[tuple[int, int], ...]] = {}
    for shape, art in _MASK_ART.items():
        offsets = _mask_offsets(art)
        for rotation in ROTATIONS:
            table[(shape, rotation)] = offsets
            offsets = _rotate_cw(offsets)
    return table


SHAPE_OFFSETS = _build_offset_table()


def piece_tiles(
    shape: Shape, anchor: tuple[int, int], rotation: int
) -> tuple[tuple[int, int], ...]:
    """Return the five tiles covered by ``shape`` at ``anchor`` under ``rotation``."""
    if rotation not in ROTATIONS:
        raise ValueError(f"rotation must be one of {ROTATIONS}, got {rotation}")
    ax, ay = anchor
    return tuple((ax + dx, ay + dy) for dx, dy in SHAPE_OFFSETS[(shape, rotation)])


@dataclass(frozen=True, slots=True)
class PieceSymbol:
    """Symbolic identity of a piece: what the teacher can talk about."""

    shape: Shape
    color: Color
    region: Region


@dataclass(frozen=True, slots=True)
class Piece:
    """A placed pentomino. Rotation changes tiles but never the symbol."""

    id: int
    symbol: PieceSymbol
    anchor: tuple[int, int]
    rotation: int
    tiles: tuple[tuple[int, int], ...]


def region_index(coord: int, extent: int) -> int:
    """Third of the board (0, 1 or 2) that a tile coordinate falls into."""
    return 3 * coord // extent


def region_from_tile(x: int, y: int, width: int, height: int) -> Region | None:
    """Region of a tile, or None inside the central ninth."""
    return _THIRDS_TO_REGION[(region_index(x, width), region_index(y, height))]


def region_of(piece: Piece, width: int, height: int) -> Region:
    """Region of a placed piece, judged by its 5x5 box center (the anchor).

    Raises:
        CenterRegionError: if the anchor falls into the unnamed central ninth.
    """
    region = region_from_tile(piece.anchor[0], piece.anchor[1], width, height)
    if region is None:
        raise CenterRegionError(
            f"piece {piece.id} anchored at {piece.anchor} sits in the center ninth"
        )
    return region


def project_coords(
    position: tuple[int, int], width: int, height: int
) -> tuple[float, float]:
    """Affine map of a tile coordinate onto [-1, 1]^2 with the center at (0, 0)."""
    x, y = position
    return (2.0 * x / width - 1.0, 2.0 * y / height - 1.0)


class Board:
    """Tile grid holding non-overlapping pentomino pieces."""

    def __init__(self, width: int, height: int) -> None:
        if width < VIEW_SIZE or height < VIEW_SIZE:
            # Smaller boards are allowed for tests; the view just pads more.
            pass
        self.width = width
        self.height = height
        self._grid: list[int] = [-1] * (width * height)
        self.pieces: dict[int, Piece] = {}
        self._base_image: np.ndarray | None = None

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def occupant(self, x: int, y: int) -> int | None:
        """Piece id occupying a tile, or None when empty."""
        pid = self._grid[y * self.width + x]
        return None if pid < 0 else pid

    def can_place(self, shape: Shape, anchor: tuple[int, int], rotation: int) -> bool:
        """True iff all five tiles are in bounds and unoccupied."""
        grid = self._grid
        width, height = self.width, self.height
        ax, ay = anchor
        for dx, dy in SHAPE_OFFSETS[(shape, rotation)]:
            x, y = ax + dx, ay + dy
            if not (0 <= x < width and 0 <= y < height):
                return False
            if grid[y * width + x] >= 0:
                return False
        return True

    def place(
        self, symbol: PieceSymbol, anchor: tuple[int, int], rotation: int
    ) -> int:
        """Place a piece and return its id.

        Raises:
            PlacementError: if any target tile is out of bounds or occupied.
        """
        if not self.can_place(symbol.shape, anchor, rotation):
            raise PlacementError(
                f"cannot place {symbol.shape.value} at {anchor} rotated {rotation}"
            )
        pid = len(self.pieces)
        tiles = piece_tiles(symbol.shape, anchor, rotation)
        for x, y in tiles:
            self._grid[y * self.width + x] = pid
        self.pieces[pid] = Piece(pid, symbol, anchor, rotation, tiles)
        self._base_image = None
        return pid

    def occupied_count(self) -> int:
        return sum(1 for v in self._grid if v >= 0)

    def base_image(self) -> np.ndarray:
        """Board pixels without the gripper: white background, colored pieces.

        The returned array is cached and must not be mutated by callers.
        """
        if self._base_image is None:
            img = np.full((self.height, self.width, 3), 255, dtype=np.uint8)
            for piece in self.pieces.values():
                rgb = COLOR_RGB[piece.symbol.color]
                for x, y in piece.tiles:
                    img[y, x] = rgb
            self._base_image = img
        return self._base_image


@dataclass(slots=True)
class GripperState:
    """Gripper position plus its previous two positions, newest first."""

    position: tuple[int, int]
    history: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def step_to(self, position: tuple[int, int]) -> None:
        """Record the current position into the trail and move."""
        self.history = (self.position,) + self.history[:1]
        self.position = position


def render(board: Board, gripper: GripperState) -> np.ndarray:
    """Full-board RGB image with the gripper trail drawn over the pieces."""
    img = board.base_image().copy()
    trail = (gripper.position,) + gripper.history
    # Oldest first so newer marks win on overlap.
    for pos, rgb in reversed(list(zip(trail, TRAIL_RGB))):
        x, y = pos
        img[y, x] = rgb
    return img


def extract_view(image: np.ndarray, position: tuple[int, int]) -> np.ndarray:
    """11x11 crop centered on ``position``; cells beyond the board are black."""
    height, width = image.shape[:2]
    x, y = position
    view = np.zeros((VIEW_SIZE, VIEW_SIZE, 3), dtype=np.uint8)
    sx0, sx1 = max(0, x - VIEW_RADIUS), min(width, x + VIEW_RADIUS + 1)
    sy0, sy1 = max(0, y - VIEW_RADIUS), min(height, y + VIEW_RADIUS + 1)
    ox0 = sx0 - (x - VIEW_RADIUS)
    oy0 = sy0 - (y - VIEW_RADIUS)
    view[oy0 : oy0 + (sy1 - sy0), ox0 : ox0 + (sx1 - sx0)] = image[sy0:sy1, sx0:sx1]
    return view
