"""Finite certified approximations of highly transitive actions of HNN
extensions and amalgamated free products, built round by round from
pre-actions, Bass-Serre graphs and treeing edges."""

from .groups import (
    make_bs_presentation,
    make_zmod_amalgam,
    make_z4_amalgam_sigma2,
    parse_presentation,
)

__all__ = [
    "make_bs_presentation",
    "make_zmod_amalgam",
    "make_z4_amalgam_sigma2",
    "parse_presentation",
]
