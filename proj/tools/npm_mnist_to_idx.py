#!/usr/bin/env python3
"""Convert the `mnist` npm package digit files into IDX files.

The package ships 10000 MNIST digits as src/digits/<label>.json, each holding a
flat list of 784-float images scaled to [0, 1]. Images are written in label
order as t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte.

    npm pack mnist && tar xf mnist-*.tgz
    python3 tools/npm_mnist_to_idx.py package/src/digits /path/to/data
"""

import argparse
import json
import struct
from pathlib import Path

SIDE = 28
PIXELS = SIDE * SIDE


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("digits_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    args = parser.parse_args()

    images = bytearray()
    labels = bytearray()
    for label in range(10):
        data = json.loads((args.digits_dir / f"{label}.json").read_text())["data"]
        if len(data) % PIXELS:
            raise SystemExit(f"{label}.json: length {len(data)} is not a multiple of {PIXELS}")
        images.extend(min(255, max(0, round(v * 255))) for v in data)
        labels.extend([label] * (len(data) // PIXELS))

    count = len(labels)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "t10k-images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, count, SIDE, SIDE) + images)
    (args.out_dir / "t10k-labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, count) + labels)
    print(f"wrote {count} images to {args.out_dir}")


if __name__ == "__main__":
    main()
