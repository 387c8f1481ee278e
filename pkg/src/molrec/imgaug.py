"""Image augmentation operators with exact keypoint tracking.

Fixed application order (rotate, crop, pad, rescale, blur, gaussian noise,
salt-and-pepper), each gated independently at a configurable probability.
Geometric operators transform the atom pixel coordinates through the same
affine map as the raster; a transform that would push an atom outside the
canvas is resampled up to 10 times, then skipped.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image, ImageFilter

from .render import RenderedSample

__all__ = ["OP_ORDER", "augment_image", "rotation_affine", "apply_affine"]

OP_ORDER = ("rotate", "crop", "pad", "rescale", "blur", "gaussian_noise", "salt_pepper_noise")

_MAX_RETRIES = 10


def rotation_affine(angle_deg: float, size: tuple[int, int]) -> np.ndarray:
    """Forward pixel map of PIL's counterclockwise center rotation."""
    w, h = size
    cx, cy = w / 2.0, h / 2.0
    theta = math.radians(angle_deg)
    cos, sin = math.cos(theta), math.sin(theta)
    # y grows downward, so the visually-ccw rotation is [[cos, sin], [-sin, cos]]
    return np.array([
        [cos, sin, cx - cos * cx - sin * cy],
        [-sin, cos, cy + sin * cx - cos * cy],
        [0.0, 0.0, 1.0],
    ])


def _translation(dx: float, dy: float) -> np.ndarray:
    return np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])


def apply_affine(affine: np.ndarray, points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    out = []
    for x, y in points:
        v = affine @ np.array([x, y, 1.0])
        out.append((float(v[0]), float(v[1])))
    return out


def _inside(points: Iterable[tuple[float, float]], size: tuple[int, int]) -> bool:
    w, h = size
    return all(0.0 <= x < w and 0.0 <= y < h for x, y in points)


def _op_rotate(img: Image.Image, coords, rng: np.random.Generator):
    for _ in range(_MAX_RETRIES):
        angle = float(rng.uniform(-90.0, 90.0))
        affine = rotation_affine(angle, img.size)
        moved = apply_affine(affine, coords)
        if _inside(moved, img.size):
            out = img.rotate(angle, resample=Image.BILINEAR, fillcolor=255)
            return out, moved
    return img, list(coords)


def _op_crop(img: Image.Image, coords, rng: np.random.Generator):
    w, h = img.size
    for _ in range(_MAX_RETRIES):
        left = int(w * rng.uniform(0, 0.01))
        top = int(h * rng.uniform(0, 0.01))
        right = int(w * rng.uniform(0, 0.01))
        bottom = int(h * rng.uniform(0, 0.01))
        nw, nh = w - left - right, h - top - bottom
        if nw < 8 or nh < 8:
            continue
        moved = apply_affine(_translation(-left, -top), coords)
        if _inside(moved, (nw, nh)):
            return img.crop((left, top, w - right, h - bottom)), moved
    return img, list(coords)


def _op_pad(img: Image.Image, coords, rng: np.random.Generator):
    w, h = img.size
    side = ("left", "top", "right", "bottom")[rng.integers(4)]
    amount = int((w if side in ("left", "right") else h) * rng.uniform(0.0, 0.4))
    if amount == 0:
        return img, list(coords)
    nw = w + amount if side in ("left", "right") else w
    nh = h + amount if side in ("top", "bottom") else h
    canvas = Image.new("L", (nw, nh), 255)
    ox = amount if side == "left" else 0
    oy = amount if side == "top" else 0
    canvas.paste(img, (ox, oy))
    return canvas, apply_affine(_translation(ox, oy), coords)


def _op_rescale(img: Image.Image, coords, rng: np.random.Generator):
    w, h = img.size
    factor = float(rng.uniform(0.70, 0.85))  # downscale by 15-30%, then back
    dw, dh = max(4, round(w * factor)), max(4, round(h * factor))
    small = img.resize((dw, dh), Image.BILINEAR)
    return small.resize((w, h), Image.BILINEAR), list(coords)


def _op_blur(img: Image.Image, coords, rng: np.random.Generator):
    radius = float(rng.uniform(0.4, 1.8))
    return img.filter(ImageFilter.GaussianBlur(radius)), list(coords)


def _op_gaussian(img: Image.Image, coords, rng: np.random.Generator):
    sigma = float(rng.uniform(3.0, 12.0))
    arr = np.asarray(img, dtype=np.float64)
    noisy = arr + rng.normal(0.0, sigma, arr.shape)
    return Image.fromarray(np.clip(noisy, 0, 255).astype(np.uint8), "L"), list(coords)


def _op_salt_pepper(img: Image.Image, coords, rng: np.random.Generator):
    arr = np.asarray(img).copy()
    h, w = arr.shape
    count = int(w * h * rng.uniform(0.0005, 0.005))
    if count:
        ys = rng.integers(0, h, count)
        xs = rng.integers(0, w, count)
        arr[ys, xs] = 0  # random black pixels
    return Image.fromarray(arr, "L"), list(coords)


_OPS = {
    "rotate": _op_rotate,
    "crop": _op_crop,
    "pad": _op_pad,
    "rescale": _op_rescale,
    "blur": _op_blur,
    "gaussian_noise": _op_gaussian,
    "salt_pepper_noise": _op_salt_pepper,
}


def augment_image(sample: RenderedSample, rng: np.random.Generator,
                  ops: Optional[Iterable[str]] = None,
                  probability: float = 0.5) -> RenderedSample:
    """Apply the operator chain; returns a new sample with coordinates
    re-normalized to the output raster size."""
    enabled = set(OP_ORDER if ops is None else ops)
    unknown = enabled - set(OP_ORDER)
    if unknown:
        raise ValueError(f"unknown augmentation ops: {sorted(unknown)}")
    img = sample.image
    coords = list(sample.atom_pixel_coords)
    for name in OP_ORDER:
        if name not in enabled:
            continue
        if rng.random() >= probability:
            continue
        img, coords = _OPS[name](img, coords, rng)
    w, h = img.size
    graph = sample.graph.copy()
    for i, (px, py) in enumerate(coords):
        graph.atoms[i].x = min(px / w, 1.0 - 1e-12)
        graph.atoms[i].y = min(py / h, 1.0 - 1e-12)
    return RenderedSample(img, coords, graph, sample.smiles, sample.pseudo_smiles,
                          list(sample.flags))
