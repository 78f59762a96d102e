"""Synthetic muscle images with planted cells and known ground truth.

The background is a sinusoidal fibre texture. Cells are anti-aliased dark
disks; clusters are chains of touching disks. An optional flat bright void
with a dark boundary band stands in for the muscle edge.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationError
from .imgproc import round_clamp


@dataclass
class SynthSpec:
    width: int = 1600
    height: int = 1200
    n_discrete: int = 40
    clusters: list[int] = field(default_factory=list)  # cells per cluster
    radius_range: tuple[float, float] = (12.0, 13.0)
    background: float = 180.0
    cell_intensity: float = 70.0
    stripe_amplitude: float = 12.0
    stripe_period: float = 40.0
    void: str = "none"  # none | half_plane | corner_wedge
    void_fraction: float = 0.35
    void_intensity: float = 235.0
    band_width: float = 30.0
    band_intensity: float = 80.0
    noise_sigma: float = 0.0
    min_gap: float = 10.0
    margin: float = 20.0
    near_edge: int = 0  # discrete cells placed within 150 px of the void boundary
    cluster_spacing: float = 1.9  # centre distance between linked cluster cells, in radii
    seed: int = 0

    def __post_init__(self):
        self.radius_range = tuple(self.radius_range)
        self.clusters = list(self.clusters)
        if self.void not in ("none", "half_plane", "corner_wedge"):
            raise GenerationError(f"unknown void kind {self.void!r}")
        if self.width < 64 or self.height < 64:
            raise GenerationError("image too small")
        lo, hi = self.radius_range
        if not 0 < lo <= hi:
            raise GenerationError("invalid radius range")
        if any(k < 2 for k in self.clusters):
            raise GenerationError("a cluster needs at least two cells")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class GroundTruth:
    objects: list[dict]  # id, x, y, r, cluster (None for discrete)
    clusters: list[dict]  # id, k, members, x, y (mean centre)
    void_mask: np.ndarray
    boundary: dict | None  # signed line: nx*x + ny*y - c; positive side is void

    @property
    def n_discrete(self) -> int:
        return sum(1 for o in self.objects if o["cluster"] is None)

    @property
    def n_cells_in_clusters(self) -> int:
        return sum(c["k"] for c in self.clusters)

    @property
    def counts(self) -> dict:
        return {
            "n_discrete": self.n_discrete,
            "n_clusters": len(self.clusters),
            "n_cells_in_clusters": self.n_cells_in_clusters,
            "n_total": self.n_discrete + self.n_cells_in_clusters,
        }

    def to_dict(self, void_mask_file: str | None = None) -> dict:
        return {
            "schema": 1,
            "objects": self.objects,
            "clusters": self.clusters,
            "counts": self.counts,
            "boundary": self.boundary,
            "void_mask_file": void_mask_file,
            "void_pixels": int(self.void_mask.sum()),
        }

    def edge_distance(self, x: float, y: float) -> float:
        """Euclidean distance to the planted void boundary (inf without a void)."""
        if self.boundary is None:
            return math.inf
        b = self.boundary
        return abs(b["nx"] * x + b["ny"] * y - b["c"])


def _void_line(spec: SynthSpec, rng: np.random.Generator) -> dict | None:
    """Pick a boundary line whose positive side covers ``void_fraction`` of the image."""
    if spec.void == "none":
        return None
    w, h = spec.width, spec.height
    if spec.void == "half_plane":
        # near-axis-aligned cut entering from a random side
        side = rng.integers(4)
        tilt = rng.uniform(-0.25, 0.25)
        base = {0: 0.0, 1: math.pi / 2, 2: math.pi, 3: -math.pi / 2}[int(side)]
    else:
        corner = rng.integers(4)
        base = {0: -3 * math.pi / 4, 1: -math.pi / 4, 2: math.pi / 4, 3: 3 * math.pi / 4}[int(corner)]
        tilt = rng.uniform(-0.2, 0.2)
    ang = base + tilt
    nx, ny = -math.cos(ang), -math.sin(ang)
    # offset from a quantile of a coarse grid so the positive side has the requested area
    ys, xs = np.mgrid[0:h:8, 0:w:8]
    proj = nx * xs + ny * ys
    c = float(np.quantile(proj, 1 - spec.void_fraction))
    return {"nx": nx, "ny": ny, "c": c}


def _signed(line: dict, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return line["nx"] * xs + line["ny"] * ys - line["c"]


class _Placer:
    def __init__(self, spec: SynthSpec, line: dict | None, rng: np.random.Generator):
        self.spec = spec
        self.line = line
        self.rng = rng
        self.disks: list[tuple[float, float, float]] = []

    def allowed(self, x, y, r, ignore=()) -> bool:
        s = self.spec
        if not (s.margin + r <= x <= s.width - s.margin - r and s.margin + r <= y <= s.height - s.margin - r):
            return False
        if self.line is not None:
            sd = _signed(self.line, x, y)
            if sd > -(s.band_width + r + s.min_gap):
                return False
        for i, (ox, oy, orr) in enumerate(self.disks):
            if i in ignore:
                continue
            if math.hypot(x - ox, y - oy) < r + orr + s.min_gap:
                return False
        return True

    def random_point(self, near_edge: bool = False):
        s = self.spec
        if near_edge and self.line is not None:
            # sample along the boundary at a muscle-side offset below 150 px
            px, py = self.rng.uniform(0, s.width), self.rng.uniform(0, s.height)
            sd = _signed(self.line, px, py)
            px -= sd * self.line["nx"]
            py -= sd * self.line["ny"]
            off = self.rng.uniform(s.band_width + s.radius_range[1] + s.min_gap, 145.0)
            return px - off * self.line["nx"], py - off * self.line["ny"]
        return self.rng.uniform(0, s.width), self.rng.uniform(0, s.height)

    def place_disk(self, near_edge=False, tries=5000):
        lo, hi = self.spec.radius_range
        for _ in range(tries):
            r = self.rng.uniform(lo, hi)
            x, y = self.random_point(near_edge)
            if self.allowed(x, y, r):
                self.disks.append((x, y, r))
                return len(self.disks) - 1
        raise GenerationError("could not place a cell without overlap; spec is overfull")

    def place_cluster(self, k: int, tries=2000):
        s = self.spec
        r = float(np.mean(s.radius_range))
        step = s.cluster_spacing * r
        for _ in range(tries):
            x, y = self.random_point()
            # reserve room for the whole chain before growing it
            if not self.allowed(x, y, r + step * math.sqrt(k)):
                continue
            members = [(x, y)]
            ok = True
            for _j in range(k - 1):
                for _attempt in range(200):
                    bx, by = members[self.rng.integers(len(members))]
                    ang = self.rng.uniform(0, 2 * math.pi)
                    nx, ny = bx + step * math.cos(ang), by + step * math.sin(ang)
                    if all(math.hypot(nx - mx, ny - my) >= step * 0.999 for mx, my in members):
                        members.append((nx, ny))
                        break
                else:
                    ok = False
                    break
            if not ok:
                continue
            start = len(self.disks)
            if not all(self.allowed(mx, my, r) for mx, my in members):
                continue
            self.disks.extend((mx, my, r) for mx, my in members)
            return list(range(start, start + k))
        raise GenerationError(f"could not place a cluster of {k} cells")


def render(spec: SynthSpec) -> tuple[np.ndarray, GroundTruth, np.ndarray]:
    """Return ``(noisy image, ground truth, clean image)``."""
    rng = np.random.default_rng(spec.seed)
    w, h = spec.width, spec.height
    line = _void_line(spec, rng)

    placer = _Placer(spec, line, rng)
    cluster_members = [placer.place_cluster(k) for k in spec.clusters]
    discrete = [placer.place_disk(near_edge=True) for _ in range(spec.near_edge if line else 0)]
    discrete += [placer.place_disk() for _ in range(spec.n_discrete - len(discrete))]

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    angle = rng.uniform(0, math.pi)
    phase = rng.uniform(0, 2 * math.pi)
    proj = xs * math.cos(angle) + ys * math.sin(angle)
    img = spec.background + spec.stripe_amplitude * np.sin(2 * math.pi * proj / spec.stripe_period + phase)

    void_mask = np.zeros((h, w), dtype=bool)
    if line is not None:
        sd = _signed(line, xs, ys)
        void_mask = sd > 0
        band = np.clip(0.5 - sd, 0, 1) * np.clip(sd + spec.band_width + 0.5, 0, 1)
        img = img * (1 - band) + spec.band_intensity * band
        void_cov = np.clip(sd + 0.5, 0, 1)
        img = img * (1 - void_cov) + spec.void_intensity * void_cov

    coverage = np.zeros((h, w))
    for x, y, r in placer.disks:
        x0, x1 = int(max(0, x - r - 2)), int(min(w, x + r + 3))
        y0, y1 = int(max(0, y - r - 2)), int(min(h, y + r + 3))
        d = np.hypot(xs[y0:y1, x0:x1] - x, ys[y0:y1, x0:x1] - y)
        cov = np.clip(r + 0.5 - d, 0, 1)
        np.maximum(coverage[y0:y1, x0:x1], cov, out=coverage[y0:y1, x0:x1])
    img = img * (1 - coverage) + spec.cell_intensity * coverage

    clean = round_clamp(img)
    if spec.noise_sigma > 0:
        img = img + rng.normal(0, spec.noise_sigma, img.shape)
    noisy = round_clamp(img)

    objects = []
    clusters = []
    membership = {}
    for cid, members in enumerate(cluster_members):
        for m in members:
            membership[m] = cid
        cx = float(np.mean([placer.disks[m][0] for m in members]))
        cy = float(np.mean([placer.disks[m][1] for m in members]))
        clusters.append({"id": cid, "k": len(members), "members": members, "x": cx, "y": cy})
    for i, (x, y, r) in enumerate(placer.disks):
        objects.append({"id": i, "x": float(x), "y": float(y), "r": float(r), "cluster": membership.get(i)})
    return noisy, GroundTruth(objects, clusters, void_mask, line), clean


def rasterized_disk_area(r: float, cx: float = 0.0, cy: float = 0.0) -> int:
    """Pixels whose centres lie within ``r`` of ``(cx, cy)``."""
    R = int(math.ceil(r)) + 2
    ys, xs = np.mgrid[int(cy) - R:int(cy) + R + 1, int(cx) - R:int(cx) + R + 1]
    return int(((xs - cx) ** 2 + (ys - cy) ** 2 <= r * r).sum())


def write(spec: SynthSpec, out_dir, stem: str | None = None) -> tuple[Path, Path]:
    """Render ``spec`` and write ``<stem>.png``, ``<stem>.truth.json`` and the void mask."""
    from .io import write_image, write_mask

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"synth_{spec.seed:04d}"
    img, truth, _ = render(spec)
    img_path = out_dir / f"{stem}.png"
    write_image(img_path, img)
    void_name = f"{stem}.void.png"
    write_mask(out_dir / void_name, truth.void_mask)
    doc = truth.to_dict(void_mask_file=void_name)
    doc["spec"] = asdict(spec)
    truth_path = out_dir / f"{stem}.truth.json"
    truth_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return img_path, truth_path


def load_truth(path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("void_mask_file"):
        from .io import read_mask

        doc["void_mask"] = read_mask(path.parent / doc["void_mask_file"])
    return doc
