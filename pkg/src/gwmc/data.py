"""Observed-matrix container, synthetic instance generation, and file I/O.

File formats (all indices 0-based):

masked CSV    header line ``# rows=M cols=N`` followed by ``row,col,value``
              triples, one observed entry per line.
ratings CSV   ``user,item,rating`` triples, matrix sized by the largest
              indices seen; ratings restricted to a closed range.
graymap       binary P5 portable graymap, 8-bit (maxval <= 255), one channel.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class ObservedMatrix:
    """Dense value matrix plus a boolean observation mask.

    Values at unobserved positions are stored as 0 and carry no meaning.
    """

    values: np.ndarray
    mask: np.ndarray
    observed_count: int = -1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.values.shape != self.mask.shape or self.values.ndim != 2:
            raise ValidationError(
                f"values {self.values.shape} and mask {self.mask.shape} must be equal 2-d shapes"
            )
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValidationError("observed values contain NaN/Inf")
        self.values = np.where(self.mask, self.values, 0.0)
        self.observed_count = int(self.mask.sum())

    @property
    def shape(self):
        return self.values.shape

    def transposed(self):
        return ObservedMatrix(self.values.T.copy(), self.mask.T.copy())


@dataclass
class SyntheticInstance:
    x_true: np.ndarray
    observed: ObservedMatrix
    rank: int
    sampling_ratio: float
    noise_std: float
    seed: int


def generate_synthetic(m, n, k, rho, noise_std=0.0, seed=0):
    """Rank-k ground truth A B^T with an exact-count uniform random mask.

    A is m x k and B is n x k with i.i.d. standard normal entries; exactly
    floor(rho*m*n) positions are observed (sampling without replacement),
    with i.i.d. Gaussian noise of the given std added at observed positions.
    """
    if not (1 <= k <= min(m, n)):
        raise ValidationError(f"rank k={k} must satisfy 1 <= k <= min(m, n)={min(m, n)}")
    if not (0.0 < rho <= 1.0):
        raise ValidationError(f"sampling ratio rho={rho} must lie in (0, 1]")
    if noise_std < 0:
        raise ValidationError(f"noise_std must be >= 0, got {noise_std}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, k))
    b = rng.standard_normal((n, k))
    x = a @ b.T
    count = int(rho * m * n)
    flat = rng.choice(m * n, size=count, replace=False)
    mask = np.zeros(m * n, dtype=bool)
    mask[flat] = True
    mask = mask.reshape(m, n)
    values = x.copy()
    if noise_std > 0:
        values = values + noise_std * rng.standard_normal((m, n))
    observed = ObservedMatrix(np.where(mask, values, 0.0), mask)
    return SyntheticInstance(
        x_true=x, observed=observed, rank=k, sampling_ratio=rho, noise_std=noise_std, seed=seed
    )


# ---------------------------------------------------------------------------
# masked CSV triples

_HEADER_RE = re.compile(r"^#\s*rows=(\d+)\s+cols=(\d+)\s*$")


def save_masked_csv(path, observed):
    m, n = observed.shape
    rows, cols = np.nonzero(observed.mask)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# rows={m} cols={n}\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r},{c},{float(observed.values[r, c])!r}\n")


def load_masked_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        match = _HEADER_RE.match(header.strip())
        if match is None:
            raise ValidationError(f"{path}: missing '# rows=M cols=N' header line")
        m, n = int(match.group(1)), int(match.group(2))
        values = np.zeros((m, n))
        mask = np.zeros((m, n), dtype=bool)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 'row,col,value'")
            r, c = int(parts[0]), int(parts[1])
            if not (0 <= r < m and 0 <= c < n):
                raise ValidationError(f"{path}:{lineno}: index ({r},{c}) outside {m}x{n}")
            if mask[r, c]:
                raise ValidationError(f"{path}:{lineno}: duplicate entry for ({r},{c})")
            v = float(parts[2])
            if not np.isfinite(v):
                raise ValidationError(f"{path}:{lineno}: non-finite value")
            values[r, c] = v
            mask[r, c] = True
    return ObservedMatrix(values, mask)


# ---------------------------------------------------------------------------
# rating triples

def load_ratings(path, r_min, r_max):
    """Load user,item,rating triples; matrix is sized by the largest indices."""
    if not r_max > r_min:
        raise ValidationError(f"need r_max > r_min, got [{r_min}, {r_max}]")
    triples = []
    max_u = max_i = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 'user,item,rating'")
            u, i, v = int(parts[0]), int(parts[1]), float(parts[2])
            if u < 0 or i < 0:
                raise ValidationError(f"{path}:{lineno}: negative index")
            if not np.isfinite(v):
                raise ValidationError(f"{path}:{lineno}: non-finite rating")
            if not (r_min <= v <= r_max):
                raise ValidationError(
                    f"{path}:{lineno}: rating {v} outside [{r_min}, {r_max}]"
                )
            triples.append((u, i, v))
            max_u = max(max_u, u)
            max_i = max(max_i, i)
    if not triples:
        raise ValidationError(f"{path}: no ratings found")
    values = np.zeros((max_u + 1, max_i + 1))
    mask = np.zeros((max_u + 1, max_i + 1), dtype=bool)
    for u, i, v in triples:
        if mask[u, i]:
            raise ValidationError(f"{path}: duplicate rating for ({u},{i})")
        values[u, i] = v
        mask[u, i] = True
    return ObservedMatrix(values, mask)


def holdout_split(observed, train_fraction, seed):
    """Partition the observed set (not the full grid) into train and test.

    floor(train_fraction * L) entries are kept for training, chosen
    uniformly at random; the rest form the holdout.
    """
    if not (0.0 < train_fraction <= 1.0):
        raise ValidationError(f"train_fraction={train_fraction} must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    rows, cols = np.nonzero(observed.mask)
    order = rng.permutation(len(rows))
    n_train = int(train_fraction * len(rows))
    train_mask = np.zeros_like(observed.mask)
    test_mask = np.zeros_like(observed.mask)
    tr = order[:n_train]
    te = order[n_train:]
    train_mask[rows[tr], cols[tr]] = True
    test_mask[rows[te], cols[te]] = True
    train = ObservedMatrix(np.where(train_mask, observed.values, 0.0), train_mask)
    test = ObservedMatrix(np.where(test_mask, observed.values, 0.0), test_mask)
    return train, test


# ---------------------------------------------------------------------------
# binary P5 graymaps

def _read_pgm_tokens(data, count):
    """Read `count` whitespace/comment-delimited header tokens; return tokens and offset."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise ValidationError("graymap: truncated header")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1  # single whitespace after maxval precedes raster


def load_gray_image(path):
    """Load an 8-bit binary P5 graymap as a fully observed matrix in [0, 255]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise ValidationError(f"{path}: not a binary P5 graymap")
    tokens, offset = _read_pgm_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed graymap header") from exc
    if width <= 0 or height <= 0:
        raise ValidationError(f"{path}: bad dimensions {width}x{height}")
    if not (0 < maxval <= 255):
        raise ValidationError(f"{path}: only 8-bit graymaps supported, maxval={maxval}")
    raster = data[2 + offset :]
    if len(raster) < width * height:
        raise ValidationError(f"{path}: truncated raster")
    pixels = np.frombuffer(raster[: width * height], dtype=np.uint8)
    values = pixels.reshape(height, width).astype(float)
    return ObservedMatrix(values, np.ones((height, width), dtype=bool))


def save_gray_image(path, values):
    """Write a matrix as an 8-bit P5 graymap, clamping and rounding to [0, 255]."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValidationError("graymap output must be a 2-d matrix")
    pixels = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def mask_pixels(observed, keep_fraction, seed):
    """Keep floor(keep_fraction * L) of the observed entries, drop the rest."""
    if not (0.0 < keep_fraction <= 1.0):
        raise ValidationError(f"keep_fraction={keep_fraction} must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    rows, cols = np.nonzero(observed.mask)
    count = int(keep_fraction * len(rows))
    keep = rng.choice(len(rows), size=count, replace=False)
    mask = np.zeros_like(observed.mask)
    mask[rows[keep], cols[keep]] = True
    return ObservedMatrix(np.where(mask, observed.values, 0.0), mask)
