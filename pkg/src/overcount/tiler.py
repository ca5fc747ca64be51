"""Sliding-window decomposition of scenes into overlapping fixed-size tiles.

Tile planning is pure: identical inputs give identical row-major tile lists,
so per-tile work can run concurrently while outputs keep a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import PixelBox


@dataclass(frozen=True)
class TileGrid:
    tile_size_px: int
    stride_px: int

    def __post_init__(self) -> None:
        if not 1 <= self.stride_px <= self.tile_size_px:
            raise ValueError(
                f"stride must satisfy 1 <= stride <= tile_size, got "
                f"stride={self.stride_px} tile_size={self.tile_size_px}"
            )


@dataclass(frozen=True)
class Tile:
    """One window of a scene. `origin` is the window's top-left scene pixel."""

    tile_index: tuple[int, int]  # (row_i, col_i)
    origin: tuple[int, int]  # (x0, y0)
    window: PixelBox  # scene-frame region covered by this tile


def _axis_origins(extent: int, tile_size: int, stride: int) -> list[int]:
    """Window start positions along one axis.

    Regular starts are multiples of the stride; the final start is shifted
    back (never padded) so the last window ends exactly at the scene edge.
    Scenes smaller than the tile size get a single start at 0.
    """
    origins: list[int] = []
    pos = 0
    while True:
        if pos + tile_size >= extent:
            origins.append(max(extent - tile_size, 0))
            return origins
        origins.append(pos)
        pos += stride


def plan_tiles(width: int, height: int, grid: TileGrid) -> list[Tile]:
    """Decompose a width x height scene into row-major tiles covering every pixel."""
    if width < 1 or height < 1:
        raise ValueError(f"scene extent must be >= 1, got {width}x{height}")
    xs = _axis_origins(width, grid.tile_size_px, grid.stride_px)
    ys = _axis_origins(height, grid.tile_size_px, grid.stride_px)
    tiles: list[Tile] = []
    for row_i, y0 in enumerate(ys):
        for col_i, x0 in enumerate(xs):
            window = PixelBox(
                float(x0),
                float(y0),
                float(min(x0 + grid.tile_size_px, width)),
                float(min(y0 + grid.tile_size_px, height)),
            )
            tiles.append(Tile(tile_index=(row_i, col_i), origin=(x0, y0), window=window))
    return tiles


def localize_box(tile: Tile, global_box: PixelBox) -> PixelBox:
    """Translate a scene-frame box into the tile frame, clipped to the window.

    The box must intersect the tile window with positive area.
    """
    window = tile.window
    if not global_box.intersects(window):
        raise ValueError(
            f"box [{global_box.x_min}, {global_box.y_min}, {global_box.x_max}, "
            f"{global_box.y_max}] does not intersect tile {tile.tile_index}"
        )
    clipped = global_box.clip(window.x_min, window.y_min, window.x_max, window.y_max)
    return clipped.translate(-float(tile.origin[0]), -float(tile.origin[1]))


def globalize_box(tile: Tile, local_box: PixelBox) -> PixelBox:
    """Translate a tile-frame box back to the scene frame.

    Exact inverse of localize_box for boxes that needed no clipping.
    """
    window = tile.window
    if (
        local_box.x_min < 0
        or local_box.y_min < 0
        or local_box.x_max > window.width
        or local_box.y_max > window.height
    ):
        raise ValueError(
            f"local box [{local_box.x_min}, {local_box.y_min}, {local_box.x_max}, "
            f"{local_box.y_max}] exceeds the {window.width:g}x{window.height:g} "
            f"window of tile {tile.tile_index}"
        )
    return local_box.translate(float(tile.origin[0]), float(tile.origin[1]))
