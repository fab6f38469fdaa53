import numpy as np
import pytest

from belfusion import (
    atom,
    enumerate_dsm_lattice,
    free_model,
    make_bba,
    make_frame,
    shafer_model,
    top,
)


@pytest.fixture
def frame2():
    return make_frame(["A", "B"])


@pytest.fixture
def frame3():
    return make_frame(["A", "B", "C"])


def random_bba(rng: np.random.Generator, model, max_focals: int = 4):
    """A random valid mass function over the model's possible elements."""
    candidates = [e for e in enumerate_dsm_lattice(model.frame)
                  if not model.is_empty(e)]
    count = int(rng.integers(1, min(max_focals, len(candidates)) + 1))
    picks = rng.choice(len(candidates), size=count, replace=False)
    raw = rng.random(count) + 1e-3
    raw /= raw.sum()
    raw[-1] = 1.0 - raw[:-1].sum()  # close the sum exactly
    return make_bba(model, {candidates[int(i)]: float(v) for i, v in zip(picks, raw)})


def worked_m4_sources(frame):
    """The two-source, two-class hyper-power-set worked case."""
    model = free_model(frame)
    a, b = atom(frame, 0), atom(frame, 1)
    m1 = make_bba(model, {a: 0.6, top(frame): 0.4})
    m2 = make_bba(model, {a & b: 0.5, top(frame): 0.5})
    return model, m1, m2


def worked_m5_sources(frame):
    """The two-source proportion-model worked case on the exclusive model."""
    model = shafer_model(frame)
    a, b = atom(frame, 0), atom(frame, 1)
    m1 = make_bba(model, {a: 0.6, top(frame): 0.4})
    m2 = make_bba(model, {a: 0.3, b: 0.2, top(frame): 0.5})
    return model, m1, m2
