"""Cutoff functions: Gevrey bumps, tile weights, polynomial weights and radial filters."""

from decoupling_lab.cutoffs.bumps import (
    FilterBank,
    GevreyBump,
    band_filter,
    box_cutoff,
    build_filter_bank,
    build_gevrey_bump,
)
from decoupling_lab.cutoffs.selftest import CutoffSelftestReport, cutoff_selftest
from decoupling_lab.cutoffs.tiles import TileWeightSystem, build_tile_weights
from decoupling_lab.cutoffs.weights import (
    PolyWeight,
    kappa_w,
    plate_weight,
    scale_weight,
    weighted_cell_average,
)

__all__ = [
    "CutoffSelftestReport",
    "FilterBank",
    "GevreyBump",
    "PolyWeight",
    "TileWeightSystem",
    "band_filter",
    "box_cutoff",
    "build_filter_bank",
    "build_gevrey_bump",
    "build_tile_weights",
    "cutoff_selftest",
    "kappa_w",
    "plate_weight",
    "scale_weight",
    "weighted_cell_average",
]
