"""Beta numbers and Reifenberg-type covers for point measures in l^p spaces."""

import json

from ._core import (
    NormedSpace,
    apex_bilipschitz,
    best_plane,
    beta,
    cover_json,
    dini_profile,
    duality_map,
    modulus_smoothness_bound,
    modulus_smoothness_empirical,
    no_power_gain_det,
    pack_json,
    run_cli,
    smoothness_power,
    snowflake_lengths,
)


def cover(space, points, k, **kwargs):
    return json.loads(cover_json(space, points, k, **kwargs))


def pack(space, points, k, **kwargs):
    return json.loads(pack_json(space, points, k, **kwargs))


__all__ = [
    "NormedSpace",
    "apex_bilipschitz",
    "best_plane",
    "beta",
    "cover",
    "dini_profile",
    "duality_map",
    "modulus_smoothness_bound",
    "modulus_smoothness_empirical",
    "no_power_gain_det",
    "pack",
    "run_cli",
    "smoothness_power",
    "snowflake_lengths",
]
