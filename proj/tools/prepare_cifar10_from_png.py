#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The TissueNet Authors
"""Rebuild CIFAR-10 binary batches from the PNG strips of the tfjs-cifar10 npm package.

Each strip is a 1024x10000 RGB PNG holding one 32x32 image per row in HWC
order. Labels come from train_lables.json (50000) and test_lables.json
(10000). Output records are the standard 3073 bytes: label, then the R, G
and B planes.
"""

import argparse
import json
import pathlib
import sys

import numpy as np
from PIL import Image

BATCHES = [f"data_batch_{i}" for i in range(1, 6)] + ["test_batch"]


def convert(strip: pathlib.Path, labels: list[int]) -> bytes:
    pixels = np.asarray(Image.open(strip).convert("RGB"), dtype=np.uint8)
    if pixels.shape != (10000, 1024, 3):
        raise ValueError(f"{strip}: expected 10000x1024 RGB, got {pixels.shape}")
    if len(labels) != 10000:
        raise ValueError(f"{strip}: expected 10000 labels, got {len(labels)}")
    planes = pixels.transpose(0, 2, 1).reshape(10000, 3072)  # CHW per record
    records = np.empty((10000, 3073), dtype=np.uint8)
    records[:, 0] = np.asarray(labels, dtype=np.uint8)
    records[:, 1:] = planes
    return records.tobytes()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("package", type=pathlib.Path, help="unpacked tfjs-cifar10 package directory")
    parser.add_argument("out", type=pathlib.Path, help="output directory for the .bin batches")
    args = parser.parse_args()

    train = json.loads((args.package / "train_lables.json").read_text())
    test = json.loads((args.package / "test_lables.json").read_text())
    if len(train) != 50000 or len(test) != 10000:
        print(f"error: label counts {len(train)}/{len(test)}, expected 50000/10000", file=sys.stderr)
        return 1

    args.out.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(BATCHES):
        labels = test if name == "test_batch" else train[i * 10000 : (i + 1) * 10000]
        (args.out / f"{name}.bin").write_bytes(convert(args.package / f"{name}.png", labels))
        print(f"wrote {name}.bin")
    return 0


if __name__ == "__main__":
    sys.exit(main())
