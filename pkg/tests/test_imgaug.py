import io
import math

import numpy as np
import pytest
from PIL import Image, ImageDraw

from molrec.imgaug import OP_ORDER, apply_affine, augment_image, rotation_affine
from molrec.layout import layout
from molrec.render import RenderStyle, draw
from molrec.smiles import parse


class FixedAngleRng:
    """rng double: gates always pass, uniforms return the forced angle."""

    def __init__(self, angle):
        self.angle = angle

    def random(self):
        return 0.0

    def uniform(self, lo, hi):
        return self.angle


def _sample(smi="CC(=O)Oc1ccccc1C(=O)O", size=100):
    return draw(layout(parse(smi)), RenderStyle(image_size_px=size))


def test_rotation_affine_matches_spec_example():
    affine = rotation_affine(90.0, (100, 100))
    assert apply_affine(affine, [(10.0, 20.0)]) == [(pytest.approx(20.0), pytest.approx(90.0))]


def test_rotate_op_transforms_coords_like_independent_affine():
    sample = _sample(size=100)
    out = augment_image(sample, FixedAngleRng(90.0), ops={"rotate"}, probability=1.0)
    cx = cy = 50.0
    for (px, py), (qx, qy) in zip(sample.atom_pixel_coords, out.atom_pixel_coords):
        # independent computation: visual ccw rotation by 90 degrees
        ex, ey = cx + (py - cy), cy - (px - cx)
        assert math.hypot(qx - ex, qy - ey) < 0.5


def test_all_ops_disabled_is_identity():
    sample = _sample()
    out = augment_image(sample, np.random.default_rng(0), probability=0.0)
    assert out.atom_pixel_coords == sample.atom_pixel_coords
    b1, b2 = io.BytesIO(), io.BytesIO()
    sample.image.save(b1, format="PNG")
    out.image.save(b2, format="PNG")
    assert b1.getvalue() == b2.getvalue()


def test_gaussian_noise_only_keeps_coords():
    sample = _sample()
    out = augment_image(sample, np.random.default_rng(3),
                        ops={"gaussian_noise"}, probability=1.0)
    assert out.atom_pixel_coords == sample.atom_pixel_coords
    assert np.any(np.asarray(out.image) != np.asarray(sample.image))


def test_unknown_op_rejected():
    sample = _sample()
    with pytest.raises(ValueError):
        augment_image(sample, np.random.default_rng(0), ops={"sharpen"})


def test_marker_layer_tracks_geometry():
    """Invariant check: a drawn marker block follows the affine map within 2 px."""
    rng = np.random.default_rng(8)
    for angle in (-60.0, 33.0, 75.0):
        img = Image.new("L", (140, 120), 255)
        d = ImageDraw.Draw(img)
        px, py = 90, 40
        d.rectangle([px - 1, py - 1, px + 1, py + 1], fill=0)
        rotated = img.rotate(angle, resample=Image.BILINEAR, fillcolor=255)
        arr = np.asarray(rotated).astype(float)
        ys, xs = np.nonzero(arr < 200)
        weights = 255.0 - arr[ys, xs]
        cx = float((xs + 0.5) @ weights / weights.sum())
        cy = float((ys + 0.5) @ weights / weights.sum())
        (tx, ty), = apply_affine(rotation_affine(angle, img.size), [(px + 0.5, py + 0.5)])
        assert math.hypot(cx - tx, cy - ty) <= 2.0


def test_pad_changes_size_and_renormalizes():
    sample = _sample(size=100)
    rng = np.random.default_rng(12)
    out = augment_image(sample, rng, ops={"pad"}, probability=1.0)
    w, h = out.image.size
    assert (w, h) != (100, 100)
    for (px, py), atom in zip(out.atom_pixel_coords, out.graph.atoms):
        assert atom.x == pytest.approx(px / w)
        assert atom.y == pytest.approx(py / h)


def test_full_chain_deterministic():
    sample = _sample()
    a = augment_image(sample, np.random.default_rng(77))
    b = augment_image(sample, np.random.default_rng(77))
    ba, bb = io.BytesIO(), io.BytesIO()
    a.image.save(ba, format="PNG")
    b.image.save(bb, format="PNG")
    assert ba.getvalue() == bb.getvalue()
    assert a.atom_pixel_coords == b.atom_pixel_coords


def test_op_order_is_fixed():
    assert OP_ORDER == ("rotate", "crop", "pad", "rescale", "blur",
                       "gaussian_noise", "salt_pepper_noise")
