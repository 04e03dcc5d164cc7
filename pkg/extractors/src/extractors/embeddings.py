"""EfficientNet-B0 image embeddings: conv features -> GAP -> 1280 -> 256.

The backbone runs in inference mode only. The 1280 -> 256 reduction is a
fixed linear projection drawn from a seeded generator, so the whole run is
reproducible given (weights, seed). Backbone weights load from a local file
when provided; otherwise a seeded random initialization is used, which keeps
the file contract and determinism guarantees intact (distinct images still
map to distinct vectors) without any network dependency.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import torch
import torchvision
from PIL import Image

from .errors import ExtractorError, WeightsError

log = logging.getLogger("extractors")

BACKBONE_DIM = 1280
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")
INPUT_SIDE = 224
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

KIND_PREFIX = {"sat": "embed_sat", "satellite": "embed_sat",
               "gsv": "embed_gsv", "streetview": "embed_gsv"}


@dataclass(frozen=True)
class EmbeddingSpec:
    projection_dim: int = 256
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.projection_dim <= BACKBONE_DIM:
            raise ExtractorError(
                f"projection_dim must be in 1..{BACKBONE_DIM}")


def build_backbone(weights: str | None = None, seed: int = 0) -> torch.nn.Module:
    """EfficientNet-B0 convolutional trunk in eval mode."""
    torch.manual_seed(seed)
    net = torchvision.models.efficientnet_b0(weights=None)
    if weights is None:
        # random-init fallback: eval-mode BatchNorm would normalize with the
        # untrained running stats (mean 0, var 1) and collapse activations to
        # ~0 through the deep stack; per-image batch statistics keep the
        # features well-scaled and remain deterministic
        for m in net.modules():
            if isinstance(m, torch.nn.BatchNorm2d):
                m.track_running_stats = False
                m.running_mean = None
                m.running_var = None
    else:
        if not os.path.exists(weights):
            raise WeightsError(f"backbone weights not found: {weights}")
        try:
            state = torch.load(weights, map_location="cpu", weights_only=True)
            net.load_state_dict(state)
        except (RuntimeError, ValueError, KeyError) as exc:
            raise WeightsError(f"cannot load backbone weights: {exc}") from exc
    net.eval()
    return net.features


def projection_matrix(spec: EmbeddingSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.standard_normal((BACKBONE_DIM, spec.projection_dim)) \
        / math.sqrt(BACKBONE_DIM)


def _preprocess(img: Image.Image) -> torch.Tensor:
    img = img.convert("RGB").resize((INPUT_SIDE, INPUT_SIDE), Image.BILINEAR)
    x = torch.from_numpy(np.asarray(img, dtype=np.float32) / 255.0)
    x = x.permute(2, 0, 1)
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    return ((x - mean) / std).unsqueeze(0)


def embed_image(backbone: torch.nn.Module, proj: np.ndarray,
                img: Image.Image) -> np.ndarray:
    with torch.no_grad():
        features = backbone(_preprocess(img))
    pooled = features.mean(dim=(2, 3)).squeeze(0).numpy().astype(np.float64)
    return pooled @ proj


def list_images(image_dir: str) -> list:
    try:
        names = sorted(os.listdir(image_dir))
    except OSError as exc:
        raise ExtractorError(f"cannot read image dir: {exc}") from exc
    return [n for n in names if n.lower().endswith(IMAGE_EXTENSIONS)]


def extract_embeddings(image_dir: str, kind: str, out_csv: str,
                       spec: EmbeddingSpec = EmbeddingSpec(),
                       weights: str | None = None) -> dict:
    """Embed every decodable image in image_dir into a feature CSV.

    Columns: id, then {embed_sat|embed_gsv}:e000..e{D-1}, printed with six
    decimal places. Rows are keyed by file stem and sorted by file name.
    """
    if kind not in KIND_PREFIX:
        raise ExtractorError(f"kind must be one of {sorted(KIND_PREFIX)}")
    prefix = KIND_PREFIX[kind]
    names = list_images(image_dir)
    if not names:
        raise ExtractorError(f"no images found in {image_dir}")

    # single-threaded inference keeps float accumulation order fixed
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        backbone = build_backbone(weights, seed=spec.seed)
        proj = projection_matrix(spec)
        rows, skipped = [], []
        for name in names:
            path = os.path.join(image_dir, name)
            try:
                with Image.open(path) as img:
                    vec = embed_image(backbone, proj, img)
            except (OSError, SyntaxError) as exc:
                log.warning("skipping undecodable image %s: %s", name, exc)
                skipped.append(name)
                continue
            rows.append((os.path.splitext(name)[0], vec))
    finally:
        torch.set_num_threads(n_threads)

    if not rows:
        raise ExtractorError("every image failed to decode")
    header = ["id"] + [f"{prefix}:e{i:03d}" for i in range(spec.projection_dim)]
    tmp = out_csv + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rid, vec in rows:
            w.writerow([rid] + [f"{v:.6f}" for v in vec])
    os.replace(tmp, out_csv)
    log.info("embedded %d images (%d skipped) -> %s", len(rows), len(skipped),
             out_csv)
    return {"written": len(rows), "skipped": skipped, "csv": out_csv}
