"""Build IDX-format MNIST files from the digit JSON bundled with the npm `mnist` package.

Usage: python3 scripts/mnist_from_npm.py <path/to/package/src/digits> <out_dir>

The package ships 10000 MNIST digits with pixels pre-scaled to [0,1] at three
decimals; they are rescaled to bytes, interleaved with a fixed permutation and
written as gzipped train-images-idx3-ubyte / train-labels-idx1-ubyte.
"""
import gzip
import json
import os
import struct
import sys

import numpy as np


def main(digits_dir, out_dir):
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(digits_dir, f"{digit}.json")) as f:
            data = np.asarray(json.load(f)["data"], dtype=np.float64)
        data = data.reshape(-1, 784)
        images.append(np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8))
        labels.append(np.full(len(data), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.RandomState(0).permutation(len(labels))
    images, labels = images[order], labels[order]

    os.makedirs(out_dir, exist_ok=True)
    with gzip.GzipFile(os.path.join(out_dir, "train-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(os.path.join(out_dir, "train-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {len(labels)} examples to {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
