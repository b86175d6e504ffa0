"""Dataset containers, matrix file formats and the synthetic ZSL generator.

File formats
------------
- CSV matrix: comma-separated floats, one row per line, no header.
- BIN matrix: ``b"ZSLM"``, version byte (1), dtype byte (1=f32, 2=f64),
  little-endian u64 rows, u64 cols, then row-major little-endian values.
- labels: one integer per line.
- manifest: ``key=value`` lines naming the six component files (paths
  relative to the manifest) plus optional normalization flags.
"""

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import normalize_rows

BIN_MAGIC = b"ZSLM"
BIN_VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_HEADER = struct.Struct("<4sBBQQ")

DATASET_KEYS = (
    "train_features",
    "train_labels",
    "test_features",
    "test_labels",
    "seen_descriptors",
    "unseen_descriptors",
)


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ZslDataset:
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    seen_descriptors: np.ndarray
    unseen_descriptors: np.ndarray

    @property
    def num_seen(self):
        return self.seen_descriptors.shape[0]

    @property
    def num_unseen(self):
        return self.unseen_descriptors.shape[0]

    @property
    def feature_dim(self):
        return self.train_features.shape[1]

    @property
    def descriptor_dim(self):
        return self.seen_descriptors.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    d_f: int = 16
    d_a: int = 8
    seen_classes: int = 10
    unseen_classes: int = 4
    per_class: int = 20
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("d_f", "d_a", "seen_classes", "unseen_classes", "per_class"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.d_a > self.d_f:
            warnings.warn(f"d_a={self.d_a} exceeds d_f={self.d_f}", stacklevel=3)


# -- matrix files ----------------------------------------------------------


def _fmt_float(x):
    return repr(float(x))


def save_matrix(path, m, fmt=None, dtype_code=2):
    path = Path(path)
    fmt = fmt or _format_from_suffix(path)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if fmt == "csv":
        lines = [",".join(_fmt_float(v) for v in row) for row in m]
        path.write_text("".join(line + "\n" for line in lines))
    elif fmt == "bin":
        dt = _DTYPES[dtype_code]
        header = _HEADER.pack(BIN_MAGIC, BIN_VERSION, dtype_code, m.shape[0], m.shape[1])
        path.write_bytes(header + m.astype(dt).tobytes(order="C"))
    else:
        raise DataFormatError(f"unknown matrix format {fmt!r}")


def load_matrix(path, fmt=None):
    """Read a CSV or BIN matrix as float64, rejecting ragged or non-finite data."""
    path = Path(path)
    fmt = fmt or _format_from_suffix(path)
    if fmt == "csv":
        m = _parse_csv(path.read_text(), str(path))
    elif fmt == "bin":
        m = _parse_bin(path.read_bytes(), str(path))
    else:
        raise DataFormatError(f"unknown matrix format {fmt!r}")
    bad = np.argwhere(~np.isfinite(m))
    if bad.size:
        r, c = bad[0]
        raise DataFormatError(f"{path}: non-finite value {m[r, c]} at row {r}, col {c}")
    return m


def _format_from_suffix(path):
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("csv", "txt"):
        return "csv"
    if suffix == "bin":
        return "bin"
    raise DataFormatError(f"{path}: cannot infer matrix format from suffix")


def _parse_csv(text, name="<csv>"):
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise DataFormatError(f"{name}: line {lineno}: {exc}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataFormatError(
                f"{name}: ragged row at line {lineno}: {len(row)} values, expected {width}"
            )
        rows.append(row)
    if not rows:
        raise DataFormatError(f"{name}: empty matrix")
    return np.array(rows, dtype=np.float64)


def _parse_bin(buf, name="<bin>"):
    if len(buf) < _HEADER.size:
        raise DataFormatError(f"{name}: truncated header ({len(buf)} bytes)")
    magic, version, code, rows, cols = _HEADER.unpack_from(buf)
    if magic != BIN_MAGIC:
        raise DataFormatError(f"{name}: bad magic {magic!r} at offset 0")
    if version != BIN_VERSION:
        raise DataFormatError(f"{name}: unsupported version {version} at offset 4")
    if code not in _DTYPES:
        raise DataFormatError(f"{name}: unknown dtype code {code} at offset 5")
    dt = _DTYPES[code]
    expected = rows * cols * dt.itemsize
    payload = len(buf) - _HEADER.size
    if payload != expected:
        raise DataFormatError(
            f"{name}: payload at offset {_HEADER.size} has {payload} bytes, "
            f"expected {expected} for {rows}x{cols}"
        )
    data = np.frombuffer(buf, dtype=dt, offset=_HEADER.size)
    return data.reshape(rows, cols).astype(np.float64)


def save_labels(path, labels):
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def load_labels(path):
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise DataFormatError(f"{path}: line {lineno}: not an integer: {line!r}") from None
    return np.array(out, dtype=np.int64)


# -- key=value manifests -----------------------------------------------------


def read_kv(path):
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}: line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_kv(path, items):
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in items.items()))


def parse_bool(value):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_dataset(manifest_path, normalize_features=None, normalize_descriptors=None):
    """Load a dataset from a manifest.

    Explicit keyword arguments override the manifest's
    ``normalize_features`` (default true) and ``normalize_descriptors``
    (default false) flags.
    """
    manifest_path = Path(manifest_path)
    kv = read_kv(manifest_path)
    missing = [k for k in DATASET_KEYS if k not in kv]
    if missing:
        raise DataFormatError(f"{manifest_path}: missing keys {missing}")
    root = manifest_path.parent
    if normalize_features is None:
        normalize_features = parse_bool(kv.get("normalize_features", "true"))
    if normalize_descriptors is None:
        normalize_descriptors = parse_bool(kv.get("normalize_descriptors", "false"))

    train_f = load_matrix(root / kv["train_features"])
    test_f = load_matrix(root / kv["test_features"])
    seen_a = load_matrix(root / kv["seen_descriptors"])
    unseen_a = load_matrix(root / kv["unseen_descriptors"])
    if normalize_features:
        train_f, test_f = normalize_rows(train_f), normalize_rows(test_f)
    if normalize_descriptors:
        seen_a, unseen_a = normalize_rows(seen_a), normalize_rows(unseen_a)
    return ZslDataset(
        train_features=train_f,
        train_labels=load_labels(root / kv["train_labels"]),
        test_features=test_f,
        test_labels=load_labels(root / kv["test_labels"]),
        seen_descriptors=seen_a,
        unseen_descriptors=unseen_a,
    )


def save_dataset(outdir, ds, fmt="bin", extra=None):
    """Write the six component files and ``dataset.manifest``; return the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    names = {}
    for key in DATASET_KEYS:
        value = getattr(ds, key)
        if key.endswith("labels"):
            names[key] = f"{key}.txt"
            save_labels(outdir / names[key], value)
        else:
            names[key] = f"{key}.{fmt}"
            save_matrix(outdir / names[key], value, fmt)
    items = dict(names)
    items["normalize_features"] = "true"
    items["normalize_descriptors"] = "false"
    items.update(extra or {})
    path = outdir / "dataset.manifest"
    write_kv(path, items)
    return path


# -- validation ------------------------------------------------------------


def validate_dataset(d):
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    mats = {
        "train_features": d.train_features,
        "test_features": d.test_features,
        "seen_descriptors": d.seen_descriptors,
        "unseen_descriptors": d.unseen_descriptors,
    }
    for name, m in mats.items():
        m = np.asarray(m)
        if m.ndim != 2:
            problems.append(f"{name}: expected 2-D, got shape {m.shape}")
        elif not np.all(np.isfinite(m)):
            problems.append(f"{name}: non-finite entries")
    if problems:
        return problems

    if d.train_features.shape[1] != d.test_features.shape[1]:
        problems.append(
            f"feature dim mismatch: train {d.train_features.shape[1]} vs test {d.test_features.shape[1]}"
        )
    if d.seen_descriptors.shape[1] != d.unseen_descriptors.shape[1]:
        problems.append(
            f"descriptor dim mismatch: seen {d.seen_descriptors.shape[1]} "
            f"vs unseen {d.unseen_descriptors.shape[1]}"
        )
    for split, feats, labels, n_cls in (
        ("train", d.train_features, d.train_labels, d.seen_descriptors.shape[0]),
        ("test", d.test_features, d.test_labels, d.unseen_descriptors.shape[0]),
    ):
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            problems.append(f"{split}: {labels.shape} labels for {feats.shape[0]} feature rows")
            continue
        bad = np.flatnonzero((labels < 0) | (labels >= n_cls))
        if bad.size:
            problems.append(
                f"{split}: label {labels[bad[0]]} at index {bad[0]} out of range [0, {n_cls})"
                + (f" ({bad.size} total)" if bad.size > 1 else "")
            )
    labels = np.asarray(d.train_labels)
    if labels.ndim == 1:
        present = set(labels.tolist())
        empty = [c for c in range(d.seen_descriptors.shape[0]) if c not in present]
        if empty:
            problems.append(f"seen classes without training instances: {empty}")
    return problems


# -- synthetic benchmark -----------------------------------------------------


def make_synthetic(spec):
    """Generate a synthetic zero-shot problem with a known linear map.

    Draws a map ``V*`` (d_a x d_f, entries N(0, 1/d_a)) and Gaussian class
    descriptors. Each descriptor is rescaled so its prototype ``V*^T a_j`` has
    unit norm, which makes ``V*`` reproduce the class centers exactly. Each
    instance is its class prototype plus N(0, noise_sigma^2) noise, then
    unit-normalized. Randomness comes from numpy's PCG64 seeded with
    ``spec.seed``.

    Returns ``(dataset, V*)``.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n_cls = spec.seen_classes + spec.unseen_classes
    v_true = rng.standard_normal((spec.d_a, spec.d_f)) / math.sqrt(spec.d_a)
    raw = rng.standard_normal((n_cls, spec.d_a))
    scale = np.linalg.norm(raw @ v_true, axis=1)
    descriptors = raw / scale[:, None]
    prototypes = normalize_rows(descriptors @ v_true)

    def sample(classes):
        labels = np.repeat(np.arange(len(classes)), spec.per_class)
        centers = prototypes[classes][labels]
        if spec.noise_sigma == 0:
            return centers, labels
        noise = rng.standard_normal(centers.shape) * spec.noise_sigma
        return normalize_rows(centers + noise), labels

    seen = np.arange(spec.seen_classes)
    unseen = np.arange(spec.seen_classes, n_cls)
    train_f, train_y = sample(seen)
    test_f, test_y = sample(unseen)
    ds = ZslDataset(
        train_features=train_f,
        train_labels=train_y,
        test_features=test_f,
        test_labels=test_y,
        seen_descriptors=descriptors[seen],
        unseen_descriptors=descriptors[unseen],
    )
    return ds, v_true
