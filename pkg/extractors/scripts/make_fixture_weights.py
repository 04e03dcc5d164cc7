"""Generate a local scene-parsing weights file for testing.

The state dict is a seeded random initialization of the SceneParser with the
classifier bias tilted toward a few classes (default: building=1, sky=2,
road=6), so that fixture predictions concentrate on plausible street-scene
classes. This is a stand-in for a converted ADE20K checkpoint; it exercises
the full inference path and the output file contract, not real semantics.

Usage: python3 scripts/make_fixture_weights.py --out weights.pt [--seed 0]
"""

import argparse

import torch

from extractors.segmentation import SceneParser


def make_weights(seed: int = 0, favor=(1, 2, 6), favor_bias: float = 5.0):
    torch.manual_seed(seed)
    model = SceneParser()
    with torch.no_grad():
        # damp the random per-class logits so the bias tilt dominates while
        # still leaving spatial variation between the favored classes
        model.decoder.classifier.weight.mul_(0.15)
        bias = model.decoder.classifier.bias
        bias.zero_()
        for c in favor:
            bias[c] = favor_bias
    return model.state_dict()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--favor", type=int, nargs="*", default=[1, 2, 6],
                    help="class indices whose bias is raised")
    args = ap.parse_args()
    torch.save(make_weights(args.seed, tuple(args.favor)), args.out)
    print(f"wrote fixture weights to {args.out}")


if __name__ == "__main__":
    main()
