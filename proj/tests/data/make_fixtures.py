"""Regenerates the bundled fixture images from scikit-image sample data.

All sources are public domain or CC0 (see README.md in this directory).
"""
import os

import numpy as np
from PIL import Image
import skimage

HERE = os.path.dirname(os.path.abspath(__file__))
SRC = os.path.join(os.path.dirname(skimage.__file__), "data")

# (source file, output name, split, top, left, size)
CROPS = [
    ("astronaut.png", "astronaut.png", "train", 64, 160, 128),
    ("camera.png", "camera.png", "train", 96, 200, 128),
    ("coins.png", "coins.png", "train", 40, 60, 128),
    ("text.png", "text.png", "train", 20, 40, 128),
    ("brick.png", "brick.png", "train", 200, 200, 128),
    ("coffee.png", "coffee.png", "train", 120, 180, 128),
    ("chelsea.png", "chelsea.png", "train", 60, 150, 128),
    ("rocket.jpg", "rocket.png", "train", 150, 250, 128),
    ("astronaut.png", "astronaut_face.png", "val", 40, 200, 96),
    ("camera.png", "camera_tripod.png", "val", 300, 250, 96),
]


def main():
    for src, name, split, top, left, size in CROPS:
        im = Image.open(os.path.join(SRC, src))
        arr = np.asarray(im)[top:top + size, left:left + size]
        out = os.path.join(HERE, "fixtures", split, name)
        os.makedirs(os.path.dirname(out), exist_ok=True)
        Image.fromarray(arr).save(out, optimize=True)
        print(out, arr.shape)


if __name__ == "__main__":
    main()
