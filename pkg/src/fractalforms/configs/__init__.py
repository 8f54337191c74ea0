"""Shipped structure configs."""

from __future__ import annotations

import json
from importlib import resources


def config_path(name: str):
    """Filesystem path of a shipped config ("sierpinski" or "vicsek")."""
    return resources.files(__package__) / f"{name}.json"


def load_config(name: str) -> dict:
    with resources.files(__package__).joinpath(f"{name}.json").open() as fh:
        return json.load(fh)


def sierpinski():
    from fractalforms.structure import structure_from_config

    return structure_from_config(load_config("sierpinski"))


def vicsek(s="1/2"):
    """Weighted Vicsek structure; s is the central-cell conductance scale."""
    from fractions import Fraction

    from fractalforms.structure import structure_from_config

    cfg = load_config("vicsek")
    s = Fraction(s)
    if not 0 < s < 1:
        raise ValueError("weighted Vicsek needs 0 < s < 1")
    cfg["name"] = f"vicsek_s{s.numerator}_{s.denominator}"
    cfg["resistance"] = ["1", "1", "1", "1", str(s)]
    cfg["conductance_scale"] = ["1", "1", "1", "1", str(s)]
    return structure_from_config(cfg)
