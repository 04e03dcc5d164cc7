import os
import sys

import numpy as np
import pytest
import torch
from PIL import Image

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))
from make_fixture_weights import make_weights  # noqa: E402


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Ten deterministic 48x48 RGB fixture images (plus one duplicate pair)."""
    d = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for i in range(10):
        base = rng.integers(0, 255, (48, 48, 3), dtype=np.uint8)
        # structure: brighter top band (sky-ish), dark bottom band (road-ish)
        base[:16] = np.minimum(base[:16] + 60, 255)
        base[-12:] //= 2
        Image.fromarray(base, "RGB").save(d / f"img{i:02d}.png")
    first = Image.open(d / "img00.png")
    first.save(d / "img00_copy.png")
    return str(d)


@pytest.fixture(scope="session")
def weights_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("weights") / "scene_parser.pt"
    torch.save(make_weights(seed=0), p)
    return str(p)
