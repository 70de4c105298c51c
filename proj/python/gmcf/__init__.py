"""Graphical mean curvature flow toolkit (Python bindings)."""

from ._gmcf import (
    Domain,
    GmcfError,
    Grid,
    alteration_feasibility_bound,
    boundary_alteration,
    cone_contains,
    documented_keys,
    height_cutoff,
    mollified_min,
    parse_domain,
    read_grid,
    run,
    smooth_min_profile,
    solve_flow,
    write_grid,
)

__all__ = [
    "Domain",
    "GmcfError",
    "Grid",
    "alteration_feasibility_bound",
    "boundary_alteration",
    "cone_contains",
    "documented_keys",
    "height_cutoff",
    "mollified_min",
    "parse_domain",
    "read_grid",
    "run",
    "smooth_min_profile",
    "solve_flow",
    "write_grid",
]
