"""Export the 5,000-sample MNIST subset bundled with mlxtend to IDX files.

Usage: python3 export_mnist5k.py <mnist_5k.csv.gz> <out_dir>

Each CSV row holds 784 pixel bytes followed by the label.
"""
import gzip
import struct
import sys

import numpy as np


def main(src, out_dir):
    rows = np.loadtxt(gzip.open(src), delimiter=",").astype(np.uint8)
    images, labels = rows[:, :784], rows[:, 784]
    with open(f"{out_dir}/images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(f"{out_dir}/labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
