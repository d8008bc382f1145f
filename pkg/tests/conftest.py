import numpy as np
import pytest

from resonant_swipt.scenario import (ControlParams, FrequencyPlan, NodeSpec, PhysicalConstants,
                                     PlanEntry, Scenario, default_two_ue_scenario, facing,
                                     node_lattices, polar_to_position)


@pytest.fixture(scope="session")
def default16():
    return default_two_ue_scenario(16)


def single_ue(rows=4, cols=4, f_dl=29e9, f_ul=29e9, position=(0.3, -0.2, 2.0), seed=0, **control):
    """One BS, one UE, per-node half-wavelength lattices."""
    const = PhysicalConstants()
    bs_tx, bs_rx = node_lattices(rows, cols, f_ul, f_dl, const.c)
    ue_tx, ue_rx = node_lattices(rows, cols, f_dl, f_ul, const.c)
    bs = NodeSpec((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), bs_tx, bs_rx, role="BS")
    ue = NodeSpec(tuple(map(float, position)), facing(position, bs.position), ue_tx, ue_rx,
                  role="UE", link_id=1)
    ctl = ControlParams(init_seed=seed, **control)
    return Scenario(const, ctl, bs, (ue,), FrequencyPlan((PlanEntry(1, f_dl, f_ul),), ctl.bandwidth))


def random_small(i, split):
    """Random array sizes up to 8x8, UE 1-4 m from the BS inside a 45 degree cone."""
    rng = np.random.default_rng(1000 + i)
    rows, cols = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    f_dl = float(rng.uniform(27e9, 31e9))
    f_ul = f_dl * float(rng.uniform(1.01, 1.06)) if split else f_dl
    pos = polar_to_position((0, 0, 0), (0, 0, 1), float(rng.uniform(1, 4)),
                            float(rng.uniform(0, 45)), float(rng.uniform(0, 360)))
    return single_ue(rows, cols, f_dl, f_ul, pos, seed=i)
