"""Shared fixtures: tiny phantom datasets and a small trained model.

Training-based fixtures are session-scoped so the cost is paid once.
All torch work is pinned to a single thread for run-to-run stability.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
import torch

torch.set_num_threads(1)

from aadgan.attention import AdConfig
from aadgan.generator import GeneratorConfig
from aadgan.phantom import generate_phantom_dataset
from aadgan.training import TrainConfig, train


def small_train_config(**overrides) -> TrainConfig:
    """A fast-geometry config for unit tests: 32x32 images, thin nets."""
    base = dict(
        target_phase="early",
        epochs=2,
        batch_size=4,
        seed=0,
        generator=GeneratorConfig(arch="resnet_encdec", base_width=8, depth=2, n_res_blocks=2),
        ad=AdConfig(n_c=16, trunk_widths=[8, 16], att_depth=2),
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def tiny_train_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_train")
    return generate_phantom_dataset(out, seed=7, n=12, hw=(32, 32), roi_hw=(12, 12), split="train")


@pytest.fixture(scope="session")
def tiny_val_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_val")
    return generate_phantom_dataset(out, seed=8, n=4, hw=(32, 32), roi_hw=(12, 12), split="val")


@pytest.fixture(scope="session")
def tiny_checkpoint(tiny_train_manifest):
    """A briefly trained checkpoint over the tiny dataset."""
    return train(small_train_config(), tiny_train_manifest)


def run_cli(*args, cwd=None):
    """Invoke the command line entry point in a subprocess."""
    return subprocess.run(
        [sys.executable, "-m", "aadgan", *[str(a) for a in args]],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2))
    return path
