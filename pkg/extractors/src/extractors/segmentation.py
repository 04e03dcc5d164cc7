"""Scene-parsing inference: ResNet-50 dilated encoder + pyramid pooling decoder.

Emits one single-channel class-index PNG per input image (values 0..149,
255 reserved for ignore) with the same pixel dimensions as the input, plus a
manifest CSV mapping image id to PNG path. Weights must be supplied locally;
there is no training code here.
"""

from __future__ import annotations

import csv
import logging
import os

import numpy as np
import torch
import torchvision
from PIL import Image
from torch import nn
from torch.nn import functional as F

from .embeddings import IMAGENET_MEAN, IMAGENET_STD, IMAGE_EXTENSIONS, list_images
from .errors import ExtractorError, WeightsError

log = logging.getLogger("extractors")

N_CLASSES = 150
IGNORE_VALUE = 255
PPM_SCALES = (1, 2, 3, 6)

WEIGHTS_HELP = (
    "scene-parsing weights not found: {path}\n"
    "Provide a local state-dict file via --weights. To create one for "
    "testing, run scripts/make_fixture_weights.py from the extractors "
    "package; for real inference, convert a published ADE20K checkpoint "
    "(ResNet-50 dilated encoder, PPM decoder) to this model's state dict."
)


class PPMDecoder(nn.Module):
    """Pyramid pooling over the encoder map, then a 3x3 fuse and classifier."""

    def __init__(self, in_channels: int = 2048, mid_channels: int = 128):
        super().__init__()
        self.stages = nn.ModuleList([
            nn.Sequential(
                nn.AdaptiveAvgPool2d(s),
                nn.Conv2d(in_channels, mid_channels, 1, bias=False),
                nn.BatchNorm2d(mid_channels),
                nn.ReLU(inplace=True),
            ) for s in PPM_SCALES
        ])
        fused = in_channels + mid_channels * len(PPM_SCALES)
        self.fuse = nn.Sequential(
            nn.Conv2d(fused, mid_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(mid_channels),
            nn.ReLU(inplace=True),
        )
        self.classifier = nn.Conv2d(mid_channels, N_CLASSES, 1)

    def forward(self, x):
        size = x.shape[2:]
        pyramid = [x] + [
            F.interpolate(stage(x), size=size, mode="bilinear",
                          align_corners=False)
            for stage in self.stages
        ]
        return self.classifier(self.fuse(torch.cat(pyramid, dim=1)))


class SceneParser(nn.Module):
    """ResNet-50 with dilated later stages (output stride 8) + PPM head."""

    def __init__(self):
        super().__init__()
        trunk = torchvision.models.resnet50(
            weights=None, replace_stride_with_dilation=[False, True, True])
        self.encoder = nn.Sequential(
            trunk.conv1, trunk.bn1, trunk.relu, trunk.maxpool,
            trunk.layer1, trunk.layer2, trunk.layer3, trunk.layer4)
        self.decoder = PPMDecoder()

    def forward(self, x):
        logits = self.decoder(self.encoder(x))
        return F.interpolate(logits, size=x.shape[2:], mode="bilinear",
                             align_corners=False)


def load_parser(weights: str) -> SceneParser:
    if not os.path.exists(weights):
        raise WeightsError(WEIGHTS_HELP.format(path=weights))
    model = SceneParser()
    try:
        state = torch.load(weights, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
    except (RuntimeError, ValueError, KeyError) as exc:
        raise WeightsError(f"cannot load scene-parsing weights: {exc}") from exc
    model.eval()
    return model


def _preprocess(img: Image.Image) -> torch.Tensor:
    x = torch.from_numpy(np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0)
    x = x.permute(2, 0, 1)
    mean = torch.tensor(IMAGENET_MEAN).view(3, 1, 1)
    std = torch.tensor(IMAGENET_STD).view(3, 1, 1)
    return ((x - mean) / std).unsqueeze(0)


def segment_image(model: SceneParser, img: Image.Image) -> np.ndarray:
    with torch.no_grad():
        logits = model(_preprocess(img))
    classes = logits.squeeze(0).argmax(dim=0).numpy()
    out = classes.astype(np.uint8)
    assert out.max() < N_CLASSES
    return out


def segment_streetview(image_dir: str, weights: str, out_dir: str) -> dict:
    """Segment every decodable image; write class-index PNGs and a manifest."""
    names = list_images(image_dir)
    if not names:
        raise ExtractorError(f"no images found in {image_dir}")
    model = load_parser(weights)

    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    os.makedirs(out_dir, exist_ok=True)
    manifest, skipped = [], []
    try:
        for name in names:
            path = os.path.join(image_dir, name)
            try:
                with Image.open(path) as img:
                    classes = segment_image(model, img)
            except (OSError, SyntaxError) as exc:
                log.warning("skipping undecodable image %s: %s", name, exc)
                skipped.append(name)
                continue
            rid = os.path.splitext(name)[0]
            png_path = os.path.join(out_dir, f"{rid}.png")
            Image.fromarray(classes, mode="L").save(png_path + ".tmp",
                                                    format="PNG")
            os.replace(png_path + ".tmp", png_path)
            manifest.append((rid, png_path))
    finally:
        torch.set_num_threads(n_threads)

    if not manifest:
        raise ExtractorError("every image failed to decode")
    manifest_path = os.path.join(out_dir, "manifest.csv")
    with open(manifest_path + ".tmp", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "png"])
        w.writerows(manifest)
    os.replace(manifest_path + ".tmp", manifest_path)
    log.info("segmented %d images (%d skipped) -> %s", len(manifest),
             len(skipped), out_dir)
    return {"written": len(manifest), "skipped": skipped,
            "manifest": manifest_path}
