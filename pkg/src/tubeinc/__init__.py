"""Exact incidence counting for delta-tubes, with generators, bound checks,
a Fourier high/low classifier and a distance-set pipeline."""

from .families import (BallSet, Spacing, TubeFamily, gen_bush, gen_direction_spaced, gen_fat_rectangle,
                       gen_grid_example, gen_heavy_ball_example, gen_spread_ballset, gen_well_spaced,
                       verify_spacing)
from .geometry import InvalidInput, LatticeBall, Tube, overlap_fraction, tube_ball_intersects
from .incidence import RichMap, rich_count, richness_map_fast, richness_map_oracle

__version__ = "0.1.0"

__all__ = [
    "BallSet", "InvalidInput", "LatticeBall", "RichMap", "Spacing", "Tube", "TubeFamily",
    "gen_bush", "gen_direction_spaced", "gen_fat_rectangle", "gen_grid_example", "gen_heavy_ball_example",
    "gen_spread_ballset", "gen_well_spaced", "overlap_fraction", "rich_count", "richness_map_fast",
    "richness_map_oracle", "tube_ball_intersects", "verify_spacing",
]
