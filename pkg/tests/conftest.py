import numpy as np
import pytest

from memsplate import (
    FieldGrid,
    PhysicalParams,
    build_canonical_boundary_data,
    make_context,
)


@pytest.fixture(scope="session")
def unit_params():
    return PhysicalParams(beta=1.0, tau=0.0, L=1.0, H=1.0, d=1.0, sigma1=1.0, sigma2=1.0, V=2.0)


@pytest.fixture(scope="session")
def canonical(unit_params):
    return build_canonical_boundary_data(unit_params)


@pytest.fixture(scope="session")
def small_ctx(unit_params):
    """32-element plate with a matching small field grid (fast unit tests)."""
    return make_context(unit_params, n_elems=32, field_grid=FieldGrid(32, 16, 16))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260809)


def random_feasible_state(ctx, rng, amplitude=0.5, clamped=True):
    from memsplate import PlateState

    dofs = rng.uniform(-amplitude, amplitude, ctx.plate.n_dofs)
    dofs[0::2] = np.maximum(dofs[0::2], -ctx.p.H)
    if clamped:
        dofs[[0, 1, -2, -1]] = 0.0
    return PlateState(ctx.plate, dofs)
