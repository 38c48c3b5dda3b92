from .geodesic import (
    BHV,
    MAX_LEAVES,
    Support,
    bhv_distance,
    bhv_geodesic,
    cone_path_length,
    geodesic_support,
)
from .newick import NewickError, emit_newick, parse_newick
from .splits import BhvPoint, TaxonSet, is_pendant, split_label, splits_compatible

__all__ = [
    "BHV",
    "MAX_LEAVES",
    "BhvPoint",
    "NewickError",
    "Support",
    "TaxonSet",
    "bhv_distance",
    "bhv_geodesic",
    "cone_path_length",
    "emit_newick",
    "geodesic_support",
    "is_pendant",
    "parse_newick",
    "split_label",
    "splits_compatible",
]
