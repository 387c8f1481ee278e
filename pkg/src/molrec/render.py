"""Skeletal-formula rasterization with style randomization.

Draws onto an 8-bit grayscale white canvas: plain/double/triple/aromatic
lines, filled solid wedges (narrow end at the stereocenter), hashed dashed
wedges, and atom labels that erase the bond ends beneath them. Atom pixel
centers are tracked exactly; the graph's normalized coordinates are rewritten
as pixel/size so binning downstream is self-consistent to the last float bit.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .graph import AtomKind, BondType, MolGraph
from . import chirality as _chirality
from . import smiles as _smiles

__all__ = [
    "RenderStyle",
    "RenderedSample",
    "RenderError",
    "FONT_FAMILIES",
    "LABEL_MODES",
    "sample_style",
    "assign_wedges",
    "draw",
]

logger = logging.getLogger(__name__)

LABEL_MODES = ("hetero", "terminal_hetero")
FONT_FAMILIES = ("DejaVuSans", "DejaVuSerif", "DejaVuSansMono", "STIXGeneral")

DEFAULT_IMAGE_SIZE = 384


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderStyle:
    bond_width_px: int = 2
    relative_thickness: float = 1.0
    font: str = "DejaVuSans"
    label_mode: str = "hetero"
    implicit_h_visible: bool = True
    image_size_px: int = DEFAULT_IMAGE_SIZE

    def __post_init__(self) -> None:
        if not 1 <= self.bond_width_px <= 4:
            raise RenderError(f"bond width {self.bond_width_px} outside [1, 4]")
        if not 0.5 <= self.relative_thickness <= 1.5:
            raise RenderError(f"relative thickness {self.relative_thickness} outside [0.5, 1.5]")
        if self.font not in FONT_FAMILIES:
            raise RenderError(f"unknown font {self.font}")
        if self.label_mode not in LABEL_MODES:
            raise RenderError(f"unknown label mode {self.label_mode}")

    @property
    def stroke(self) -> int:
        return max(1, round(self.bond_width_px * self.relative_thickness))


def sample_style(rng: np.random.Generator, image_size: int = DEFAULT_IMAGE_SIZE) -> RenderStyle:
    return RenderStyle(
        bond_width_px=int(rng.integers(1, 5)),
        relative_thickness=float(rng.uniform(0.5, 1.5)),
        font=str(FONT_FAMILIES[rng.integers(len(FONT_FAMILIES))]),
        label_mode=str(LABEL_MODES[rng.integers(len(LABEL_MODES))]),
        implicit_h_visible=bool(rng.integers(2)),
        image_size_px=image_size,
    )


@dataclass
class RenderedSample:
    image: Image.Image
    atom_pixel_coords: list[tuple[float, float]]
    graph: MolGraph
    smiles: str
    pseudo_smiles: Optional[str] = None
    flags: list[str] = field(default_factory=list)

    @property
    def size(self) -> tuple[int, int]:
        return self.image.size


def _font_path(family: str) -> Optional[str]:
    try:
        import matplotlib

        d = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "fonts", "ttf")
        path = os.path.join(d, family + ".ttf")
        return path if os.path.exists(path) else None
    except ImportError:
        return None


def _load_font(family: str, size: int):
    path = _font_path(family)
    if path is None:
        return ImageFont.load_default()
    return ImageFont.truetype(path, size)


def _parity_code(parity: str, neighbor_list) -> int:
    """Parity against the reference order (implicit H first, then index)."""
    if parity == "none":
        return 0
    ref = sorted(neighbor_list)
    flipped = _smiles._perm_sign(tuple(neighbor_list), tuple(ref)) < 0
    if flipped:
        parity = "cw" if parity == "ccw" else "ccw"
    return 1 if parity == "ccw" else 2


def assign_wedges(graph: MolGraph) -> MolGraph:
    """Turn stored parities into wedge bonds the renderer can draw.

    For every stereocenter, one incident single bond becomes a solid or
    dashed wedge (narrow end at the center) such that geometric perception
    reproduces the stored parity. Centers where no choice works lose their
    parity with a warning.
    """
    out = graph.copy()
    for i, atom in enumerate(out.atoms):
        if atom.parity == "none":
            continue
        if atom.coords is None:
            raise RenderError(f"atom {i} has parity but no coordinates")
        want = _parity_code(atom.parity, atom.parity_neighbors)
        candidates = []
        ring = out.ring_atoms()
        for b in out.incident_bonds(i):
            if b.type != BondType.SINGLE:
                continue
            n = b.other(i)
            candidates.append((
                out.atoms[n].parity != "none",  # avoid stealing another center's bond
                n in ring,
                out.degree(n),
                n,
                b,
            ))
        candidates.sort(key=lambda c: c[:4])
        done = False
        for *_, n, bond in candidates:
            original = (bond.begin, bond.end, bond.type)
            bond.begin, bond.end = i, n
            for wedge in (BondType.SOLID_WEDGE, BondType.DASHED_WEDGE):
                bond.type = wedge
                env = _chirality.build_environment(out, i)
                if env is None:
                    break
                got = _chirality.perceive(env, warn=False)
                if got != "none" and _parity_code(got, env.parity_neighbor_list()) == want:
                    done = True
                    break
            if done:
                break
            bond.begin, bond.end, bond.type = original
        if not done:
            logger.warning("no drawable wedge realizes parity at atom %d; dropping", i)
            atom.parity = "none"
            atom.parity_neighbors = ()
    return out


def _label_text(graph: MolGraph, idx: int, style: RenderStyle) -> Optional[str]:
    atom = graph.atoms[idx]
    label = atom.label
    if label.kind in (AtomKind.ABBREVIATION, AtomKind.RGROUP):
        return label.text
    if label.kind == AtomKind.WILDCARD:
        return "*"
    show = label.element != "C" or label.charge != 0 or label.isotope is not None
    if style.label_mode == "terminal_hetero" and graph.degree(idx) <= 1:
        show = True
    if not show:
        return None
    text = label.element
    if label.isotope is not None:
        text = f"{label.isotope}{text}"
    if style.implicit_h_visible and label.kind == AtomKind.ELEMENT:
        h = graph.implicit_hydrogens(idx)
        if h == 1:
            text += "H"
        elif h > 1:
            text += f"H{h}"
    if label.charge:
        mag = abs(label.charge)
        text += ("+" if label.charge > 0 else "-") * min(mag, 1) + (str(mag) if mag > 1 else "")
    return text


def _offset(p: tuple[float, float], q: tuple[float, float], dist: float) -> tuple[float, float]:
    dx, dy = q[0] - p[0], q[1] - p[1]
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        return (0.0, 0.0)
    return (-dy / norm * dist, dx / norm * dist)


def _draw_bond(canvas: ImageDraw.ImageDraw, p, q, btype: BondType, stroke: int,
               unit: float) -> None:
    if btype == BondType.SINGLE:
        canvas.line([p, q], fill=0, width=stroke)
    elif btype == BondType.DOUBLE:
        ox, oy = _offset(p, q, max(1.5, 0.08 * unit))
        canvas.line([(p[0] + ox, p[1] + oy), (q[0] + ox, q[1] + oy)], fill=0, width=stroke)
        canvas.line([(p[0] - ox, p[1] - oy), (q[0] - ox, q[1] - oy)], fill=0, width=stroke)
    elif btype == BondType.TRIPLE:
        ox, oy = _offset(p, q, max(2.0, 0.12 * unit))
        canvas.line([p, q], fill=0, width=stroke)
        canvas.line([(p[0] + ox, p[1] + oy), (q[0] + ox, q[1] + oy)], fill=0, width=stroke)
        canvas.line([(p[0] - ox, p[1] - oy), (q[0] - ox, q[1] - oy)], fill=0, width=stroke)
    elif btype == BondType.AROMATIC:
        canvas.line([p, q], fill=0, width=stroke)
        ox, oy = _offset(p, q, max(2.0, 0.12 * unit))
        # inner dashed companion line
        segments = 4
        for s in range(segments):
            t0 = (s + 0.15) / segments
            t1 = (s + 0.7) / segments
            a = (p[0] + (q[0] - p[0]) * t0 + ox, p[1] + (q[1] - p[1]) * t0 + oy)
            b = (p[0] + (q[0] - p[0]) * t1 + ox, p[1] + (q[1] - p[1]) * t1 + oy)
            canvas.line([a, b], fill=0, width=max(1, stroke - 1))
    elif btype == BondType.SOLID_WEDGE:
        ox, oy = _offset(p, q, max(2.5, 0.15 * unit))
        canvas.polygon([p, (q[0] + ox, q[1] + oy), (q[0] - ox, q[1] - oy)], fill=0)
    elif btype == BondType.DASHED_WEDGE:
        hashes = 6
        half = max(2.5, 0.15 * unit)
        for s in range(1, hashes + 1):
            t = s / hashes
            w = half * t
            cx, cy = p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t
            ox, oy = _offset(p, q, w)
            canvas.line([(cx + ox, cy + oy), (cx - ox, cy - oy)], fill=0,
                        width=max(1, stroke))


def draw(graph: MolGraph, style: RenderStyle, rng: Optional[np.random.Generator] = None,
         smiles: Optional[str] = None, pseudo_smiles: Optional[str] = None) -> RenderedSample:
    """Rasterize a laid-out graph. Wedge bond types are drawn as given;
    callers convert parity to wedges first (assign_wedges)."""
    size = style.image_size_px
    for i, atom in enumerate(graph.atoms):
        if atom.coords is None:
            raise RenderError(f"atom {i} has no coordinates")
    img = Image.new("L", (size, size), 255)
    canvas = ImageDraw.Draw(img)

    pixels = [(atom.x * size, atom.y * size) for atom in graph.atoms]
    lengths = [
        math.dist(pixels[b.begin], pixels[b.end]) for b in graph.bonds
    ]
    unit = float(np.median(lengths)) if lengths else size * 0.1

    for b in graph.bonds:
        _draw_bond(canvas, pixels[b.begin], pixels[b.end], b.type, style.stroke, unit)

    font = _load_font(style.font, max(9, min(int(unit * 0.55), int(size * 0.1))))
    for i in range(len(graph.atoms)):
        text = _label_text(graph, i, style)
        if text is None:
            continue
        x, y = pixels[i]
        bbox = canvas.textbbox((0, 0), text, font=font)
        tw, th = bbox[2] - bbox[0], bbox[3] - bbox[1]
        pad = 2
        canvas.rectangle(
            [x - tw / 2 - pad, y - th / 2 - pad, x + tw / 2 + pad, y + th / 2 + pad],
            fill=255,
        )
        canvas.text((x - tw / 2 - bbox[0], y - th / 2 - bbox[1]), text, fill=0, font=font)

    out_graph = graph.copy()
    for i, (px, py) in enumerate(pixels):
        # tie normalized coords to the recorded pixels so binning is exact
        out_graph.atoms[i].x = min(px / size, 1.0 - 1e-12)
        out_graph.atoms[i].y = min(py / size, 1.0 - 1e-12)
    if smiles is None:
        smiles = _smiles.write(out_graph)
    return RenderedSample(img, pixels, out_graph, smiles, pseudo_smiles)
