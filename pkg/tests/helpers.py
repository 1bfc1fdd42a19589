"""Cached reference runs shared by the test modules."""
from functools import lru_cache

from radialcone.nonlinearity import ModelParams, get_profile
from radialcone.solver import RadialGrid, SolverConfig, evolve, make_bump, zero_state


@lru_cache(maxsize=None)
def bump_run(h, n=3, alpha=4.0, profile="adkins_nappi", R=4.0, t_end=1.0, amplitude=1e-3,
             center=1.0, width=0.2, stride=1, velocity="zero"):
    """Unforced run from a bump; the apex sits at ``t_end``."""
    grid = RadialGrid.from_radius(R, h)
    data = make_bump(amplitude, center, width, grid, velocity=velocity)
    config = SolverConfig(t_end=t_end, snapshot_stride=stride)
    return evolve(config, data, grid, ModelParams(n, alpha), get_profile(profile))


def smooth_run(h=1 / 256):
    """Bump centred on the origin, so the field is nonzero up to the apex."""
    return bump_run(h, R=4.0, t_end=0.5, center=0.0, width=1.0)


@lru_cache(maxsize=None)
def zero_run(h=1 / 64, n=3, alpha=4.0, profile="adkins_nappi"):
    grid = RadialGrid.from_radius(2.0, h)
    return evolve(SolverConfig(t_end=1.0), zero_state(grid), grid, ModelParams(n, alpha),
                  get_profile(profile))
