import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from hiercpi.model import HierarchicalModel, ModelConfig  # noqa: E402
from hiercpi.numerics import set_default_dtype  # noqa: E402
from hiercpi.synth import synth_dataset  # noqa: E402

TINY = ModelConfig(n_layers=1, n_heads=2, d_model=8, n_kernels=4, ffn_mult=2)
SMALL = ModelConfig(n_layers=2, n_heads=4, d_model=64, n_kernels=16)


@pytest.fixture(autouse=True)
def _float64():
    set_default_dtype(np.float64)
    yield
    set_default_dtype(np.float64)


def randomize_heads(model: HierarchicalModel, seed: int = 0) -> HierarchicalModel:
    """Replace the zero-initialised output layers so predictions depend on the encoders."""
    rng = np.random.default_rng(seed)
    for head in (model.atom_head, model.motif_head, model.cond_head):
        head.out.weight.data[:] = rng.normal(scale=0.5, size=head.out.weight.shape)
    model.affinity_head.weight.data[:] = rng.normal(scale=0.5, size=model.affinity_head.weight.shape)
    return model


@pytest.fixture
def tiny_model():
    return randomize_heads(HierarchicalModel(TINY, seed=3))


@pytest.fixture(scope="session")
def small_complexes():
    return synth_dataset(6, seed=11, compound_atoms=(5, 8), protein_atoms=(20, 28))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.result_lines():
        terminalreporter.write_line(line)
