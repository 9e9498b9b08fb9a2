"""Synthetic color perception: rasterize a crop, cluster pixels, score, name.

A cluster's score is ``w1 * R + w2 * (1 - C)`` where R is its share of the
colored pixels and C the distance of its pixel centroid from the crop center,
divided by the crop width. The winner's mean color is named by the nearest
preset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PRESETS = {
    "red": (200, 30, 30),
    "green": (30, 160, 50),
    "blue": (30, 60, 200),
    "yellow": (230, 220, 40),
    "purple": (140, 40, 170),
}
BACKGROUND = (40, 40, 40)
BACKGROUND_TOLERANCE = 30
K = 4
PADDING = 0.2
NOISE = 10
PX_PER_M = 500
MAX_ITER = 100


@dataclass
class Crop:
    pixels: np.ndarray  # (h, w, 3) uint8

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class Cluster:
    members: np.ndarray  # flat pixel indices into the crop
    centroid_xy: tuple
    mean_rgb: tuple
    ratio: float
    center_distance: float


@dataclass(frozen=True)
class ColorModel:
    w1: float = 0.5
    w2: float = 0.5
    presets: dict = field(default_factory=lambda: dict(PRESETS))

    def __post_init__(self):
        if min(self.w1, self.w2) < 0 or abs(self.w1 + self.w2 - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")

    def name(self, rgb) -> str:
        rgb = np.asarray(rgb, dtype=float)
        best = min(self.presets, key=lambda c: (float(np.sum((rgb - self.presets[c]) ** 2)), c))
        return best


def percept_symbol(color: str) -> str:
    return "CV" + color.capitalize()


# ---------------------------------------------------------------- rendering


def _inside(shape: str, dx: np.ndarray, dy: np.ndarray, h: float) -> np.ndarray:
    if shape == "box":
        return (np.abs(dx) <= h) & (np.abs(dy) <= h)
    if shape == "ball":
        return dx * dx + dy * dy <= h * h
    if shape == "cylinder":
        return (np.abs(dx) <= 0.8 * h) & (np.abs(dy) <= h)
    if shape == "cone":
        return (np.abs(dy) <= h) & (np.abs(dx) <= (h - dy) / 2)
    raise ValueError(f"unknown shape {shape!r}")


def rasterize(objects: Sequence[tuple], target: int, noise: int = NOISE, rng_seed: int = 0,
              padding: float = PADDING, px_per_m: int = PX_PER_M) -> tuple[Crop, np.ndarray]:
    """Render the padded window around ``objects[target]``.

    ``objects`` holds (shape, rgb, x, y, half_extent) tuples. Returns the crop and a
    label grid: -1 background, otherwise the index of the object drawn there.
    """
    shape, _, cx, cy, h = objects[target]
    half = h * (1 + padding)
    n = max(2, int(round(2 * half * px_per_m)))
    offs = (np.arange(n) + 0.5) / px_per_m - half
    wx = cx + offs[None, :]
    wy = cy - offs[:, None]
    labels = np.full((n, n), -1, dtype=int)
    order = [i for i in range(len(objects)) if i != target] + [target]
    for i in order:
        s, _, ox, oy, oh = objects[i]
        mask = _inside(s, wx - ox, wy - oy, oh)
        labels[mask] = i
    palette = np.array([BACKGROUND] + [o[1] for o in objects], dtype=int)
    img = palette[labels + 1]
    if noise:
        rng = np.random.default_rng(rng_seed)
        img = img + rng.integers(-noise, noise + 1, size=img.shape)
    return Crop(np.clip(img, 0, 255).astype(np.uint8)), labels


def render_crop(state, target_id: str, rng_seed: int = 0, noise: int = NOISE) -> Crop:
    """Camera stand-in: the target's padded window including intruding neighbors."""
    objs, target = [], 0
    for o in state.placed():
        if o.id == target_id:
            target = len(objs)
        objs.append((o.shape, PRESETS[o.color], o.bbox.x, o.bbox.y, o.bbox.hx))
    if not any(o.id == target_id for o in state.placed()):
        raise ValueError(f"{target_id} is not on the table")
    return rasterize(objs, target, noise, rng_seed)[0]


# ---------------------------------------------------------------- clustering


def _farthest_point_init(x: np.ndarray, k: int, rng) -> np.ndarray:
    centers = [x[int(rng.integers(len(x)))]]
    dist = np.sum((x - centers[0]) ** 2, axis=1)
    while len(centers) < k:
        i = int(np.argmax(dist))
        if dist[i] <= 0:
            break
        centers.append(x[i])
        dist = np.minimum(dist, np.sum((x - x[i]) ** 2, axis=1))
    return np.array(centers, dtype=float)


def lloyd(x: np.ndarray, k: int, rng_seed: int = 0, max_iter: int = MAX_ITER) -> np.ndarray:
    """Cluster labels for rows of ``x``; ids are dense and empty clusters vanish."""
    if k < 1 or len(x) < k:
        raise ValueError("need at least k points and k >= 1")
    x = np.asarray(x, dtype=float)
    centers = _farthest_point_init(x, k, np.random.default_rng(rng_seed))
    labels = None
    for _ in range(max_iter):
        d = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        keep = [j for j in range(len(centers)) if np.any(labels == j)]
        centers = np.array([x[labels == j].mean(axis=0) for j in keep])
        labels = np.searchsorted(keep, labels)
    return labels


def kmeans(pixels: np.ndarray, k: int = K, rng_seed: int = 0, xy: np.ndarray | None = None,
           width: float | None = None, center: tuple | None = None,
           index: np.ndarray | None = None) -> list:
    """Clusters over an (n, 3) pixel array.

    With pixel positions ``xy`` the center distance is measured from ``center``
    and divided by ``width``; without them it is 0.
    """
    pixels = np.asarray(pixels, dtype=float).reshape(-1, 3)
    labels = lloyd(pixels, k, rng_seed)
    n = len(pixels)
    if index is None:
        index = np.arange(n)
    out = []
    for j in range(int(labels.max()) + 1):
        sel = labels == j
        mean = tuple(float(v) for v in pixels[sel].mean(axis=0))
        centroid, c = (0.0, 0.0), 0.0
        if xy is not None:
            cxy = xy[sel].mean(axis=0)
            centroid = (float(cxy[0]), float(cxy[1]))
            c = float(np.hypot(cxy[0] - center[0], cxy[1] - center[1])) / width
        out.append(Cluster(index[sel], centroid, mean, float(sel.sum()) / n, c))
    return out


def crop_clusters(crop: Crop, k: int = K, rng_seed: int = 0) -> list:
    """Cluster the crop's colored pixels; background-colored pixels are masked."""
    img = crop.pixels.reshape(-1, 3).astype(int)
    colored = np.abs(img - BACKGROUND).max(axis=1) > BACKGROUND_TOLERANCE
    if not colored.any():
        colored[:] = True
    idx = np.flatnonzero(colored)
    rows, cols = np.divmod(idx, crop.width)
    xy = np.stack([cols + 0.5, rows + 0.5], axis=1).astype(float)
    return kmeans(img[idx], min(k, len(idx)), rng_seed, xy, crop.width,
                  (crop.width / 2, crop.height / 2), idx)


def score(cluster: Cluster, model: ColorModel) -> float:
    return model.w1 * cluster.ratio + model.w2 * (1.0 - cluster.center_distance)


def score_and_name(clusters: Sequence[Cluster], crop: Crop | None = None, model: ColorModel = ColorModel()) -> str:
    if not clusters:
        raise ValueError("no clusters to score")
    best = max(clusters, key=lambda c: (score(c, model), tuple(-v for v in c.mean_rgb)))
    return percept_symbol(model.name(best.mean_rgb))


def perceive_color(crop: Crop, model: ColorModel = ColorModel(), rng_seed: int = 0) -> str:
    return score_and_name(crop_clusters(crop, rng_seed=rng_seed), crop, model)


def pixel_color_fn(state, model: ColorModel = ColorModel(), rng_seed: int = 0):
    """A snapshot color hook naming each placed object's color from its crop."""
    from .world import COLOR_PERCEPTS

    def color(obj):
        if obj.held:
            return COLOR_PERCEPTS[obj.color]
        return perceive_color(render_crop(state, obj.id, rng_seed), model, rng_seed)

    return color


def weight_grid(step: float = 0.05) -> list:
    n = int(round(1 / step))
    return [round(i * step, 10) for i in range(n + 1)]


def calibrate_weights(fixtures: Sequence[tuple], rng_seed: int = 0, step: float = 0.05) -> tuple[float, float]:
    """Grid-search w1 over the simplex for accuracy; ties go to the smallest w1."""
    if len(fixtures) < 20:
        raise ValueError("calibration needs at least 20 labeled crops")
    prepared = [(crop_clusters(crop, rng_seed=rng_seed), crop, _as_symbol(truth)) for crop, truth in fixtures]
    best, best_acc = None, -1.0
    for w1 in weight_grid(step):
        model = ColorModel(w1, round(1 - w1, 10))
        acc = accuracy_of(prepared, model)
        if acc > best_acc:
            best, best_acc = (w1, model.w2), acc
    return best


def accuracy_of(prepared: Sequence[tuple], model: ColorModel) -> float:
    hits = sum(score_and_name(cl, crop, model) == truth for cl, crop, truth in prepared)
    return hits / len(prepared)


def accuracy(fixtures: Sequence[tuple], model: ColorModel, rng_seed: int = 0) -> float:
    prepared = [(crop_clusters(c, rng_seed=rng_seed), c, _as_symbol(t)) for c, t in fixtures]
    return accuracy_of(prepared, model)


def _as_symbol(color: str) -> str:
    return color if color.startswith("CV") else percept_symbol(color)


# ---------------------------------------------------------------- fixtures


def generate_corpus(n: int, rng_seed: int = 0, intruder_rate: float = 0.5, h: float = 0.035) -> list:
    """Randomized labeled crops, each with zero or one intruding neighbor."""
    from .world import SHAPES

    rng = np.random.default_rng(rng_seed)
    colors = sorted(PRESETS)
    out = []
    for i in range(n):
        color = colors[int(rng.integers(len(colors)))]
        objs = [(SHAPES[int(rng.integers(len(SHAPES)))], PRESETS[color], 0.0, 0.0, h)]
        if rng.random() < intruder_rate:
            other = [c for c in colors if c != color][int(rng.integers(len(colors) - 1))]
            angle = rng.uniform(0, 2 * np.pi)
            gap = rng.uniform(0.0, PADDING * h)
            # neighbor touching the padded window along a random bearing
            dx, dy = np.cos(angle), np.sin(angle)
            scale = (2 * h + gap) / max(abs(dx), abs(dy))
            objs.append(("box", PRESETS[other], float(dx * scale), float(dy * scale), h))
        crop, _ = rasterize(objs, 0, NOISE, int(rng.integers(2**31)))
        out.append((crop, color))
    return out


def two_heuristic_fixture(size: int = 60, noise: int = 0) -> Crop:
    """A large green block in a corner and a small red disc at the center."""
    img = np.empty((size, size, 3), dtype=int)
    img[:] = BACKGROUND
    q = size // 2
    img[:q, :q] = PRESETS["green"]
    yy, xx = np.mgrid[0:size, 0:size]
    r = size / 6
    img[(xx + 0.5 - size / 2) ** 2 + (yy + 0.5 - size / 2) ** 2 <= r * r] = PRESETS["red"]
    if noise:
        img = img + np.random.default_rng(0).integers(-noise, noise + 1, size=img.shape)
    return Crop(np.clip(img, 0, 255).astype(np.uint8))


def write_ppm(path, crop: Crop) -> None:
    header = f"P6\n{crop.width} {crop.height}\n255\n".encode()
    Path(path).write_bytes(header + crop.pixels.astype(np.uint8).tobytes())


def read_ppm(path) -> Crop:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P6":
        raise ValueError("not a binary PPM file")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PPM is supported")
    pixels = np.frombuffer(data[pos + 1:pos + 1 + w * h * 3], dtype=np.uint8).reshape(h, w, 3)
    return Crop(pixels.copy())


def write_corpus(directory, n: int, rng_seed: int = 0) -> Path:
    """Dump crops as PPM files plus a ``manifest.txt`` of ``<file> <true-color>`` lines."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (crop, color) in enumerate(generate_corpus(n, rng_seed)):
        name = f"crop{i:04d}.ppm"
        write_ppm(directory / name, crop)
        lines.append(f"{name} {color}")
    manifest = directory / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def read_corpus(manifest) -> list:
    manifest = Path(manifest)
    out = []
    for line in manifest.read_text().splitlines():
        if line.strip():
            name, color = line.split()
            out.append((read_ppm(manifest.parent / name), color))
    return out
