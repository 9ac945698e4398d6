"""Datasets: plain-text ingestion and a seeded planted-partition generator.

File formats (UTF-8, ``#`` starts a comment line, LF or CRLF):

edges     ``i j [w]``  one undirected edge per line, ``w`` defaults to 1.0
features  ``i v1 ... vd``
labels    ``i c``
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, ParseError, ValidationError
from .gcn import LabelVector


@dataclass(frozen=True)
class Dataset:
    A: np.ndarray
    X: np.ndarray
    labels: LabelVector
    name: str = "dataset"
    node_ids: np.ndarray = None

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValidationError(f"adjacency must be square, got {self.A.shape}")
        if self.X.shape[0] != n or self.labels.labels.shape[0] != n:
            raise ValidationError("adjacency, features and labels disagree on the node count")
        if self.node_ids is None:
            object.__setattr__(self, "node_ids", np.arange(n))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def num_edges(self):
        return int(np.count_nonzero(np.triu(self.A, 1)))


@dataclass(frozen=True)
class SynthSpec:
    n: int = 200
    classes: int = 4
    p_in: float = 0.1
    p_out: float = 0.01
    feature_dim: int = 8
    feature_separation: float = 2.0
    noise_sd: float = 1.0
    seed: int = 0
    split: tuple = field(default=(0.8, 0.1, 0.1))

    def __post_init__(self):
        if self.classes < 1 or self.n < self.classes:
            raise ParameterError(f"need n >= classes >= 1, got n={self.n}, classes={self.classes}")
        if not (0 <= self.p_out < self.p_in <= 1):
            raise ParameterError(f"need 0 <= p_out < p_in <= 1, got {self.p_out}, {self.p_in}")
        if self.feature_dim < self.classes:
            raise ParameterError("feature_dim must be at least the number of classes")
        if self.noise_sd < 0 or self.feature_separation < 0:
            raise ParameterError("noise_sd and feature_separation must be non-negative")
        _check_split(self.split)


def _check_split(split):
    split = tuple(float(s) for s in split)
    if len(split) != 3 or min(split) <= 0 or abs(sum(split) - 1.0) > 1e-9:
        raise ParameterError(f"split must be three positive fractions summing to 1, got {split}")
    return split


def stratified_masks(labels, split=(0.8, 0.1, 0.1), rng=None, num_classes=None):
    """Per-class random train/val/test masks in the given proportions."""
    split = _check_split(split)
    rng = rng if rng is not None else np.random.default_rng(0)
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    C = num_classes if num_classes is not None else int(labels.max()) + 1
    for c in range(C):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_train = int(round(split[0] * idx.size))
        n_val = int(round(split[1] * idx.size))
        if idx.size and n_train == 0:
            n_train = 1
        n_val = min(n_val, idx.size - n_train)
        train[idx[:n_train]] = True
        val[idx[n_train:n_train + n_val]] = True
        test[idx[n_train + n_val:]] = True
    return train, val, test


def generate_planted_partition(spec):
    """Sample a planted-partition graph with class-dependent Gaussian features.

    Classes are balanced and randomly shuffled over the nodes.  Class means sit
    on the vertices of a regular simplex with edge length
    ``feature_separation``; each row adds isotropic noise of scale ``noise_sd``.
    """
    rng = np.random.default_rng(spec.seed)
    n, C = spec.n, spec.classes
    y = rng.permutation(np.arange(n) % C)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(y[iu] == y[ju], spec.p_in, spec.p_out)
    keep = rng.random(iu.shape[0]) < prob
    A = np.zeros((n, n))
    A[iu[keep], ju[keep]] = 1.0
    A[ju[keep], iu[keep]] = 1.0

    means = np.zeros((C, spec.feature_dim))
    means[np.arange(C), np.arange(C)] = spec.feature_separation / np.sqrt(2.0)
    X = means[y] + spec.noise_sd * rng.standard_normal((n, spec.feature_dim))

    train, val, test = stratified_masks(y, spec.split, rng, num_classes=C)
    return Dataset(A=A, X=X, labels=LabelVector(y, train, val, test, C),
                   name=f"planted-n{n}-c{C}-s{spec.seed}")


# ---------------------------------------------------------------------------
# text files

def _read_rows(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _int(tok, path, lineno, what):
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(path, lineno, f"{what} {tok!r} is not an integer") from None
    if v < 0:
        raise ParseError(path, lineno, f"{what} {v} is negative")
    return v


def _float(tok, path, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(path, lineno, f"{tok!r} is not a number") from None
    if not np.isfinite(v):
        raise ParseError(path, lineno, f"non-finite value {tok!r}")
    return v


def read_edges(path):
    """Return ``{(min_id, max_id): weight}`` from an edge file."""
    edges = {}
    for lineno, tok in _read_rows(path):
        if len(tok) not in (2, 3):
            raise ParseError(path, lineno, f"expected 'i j [w]', got {len(tok)} fields")
        i = _int(tok[0], path, lineno, "node id")
        j = _int(tok[1], path, lineno, "node id")
        w = _float(tok[2], path, lineno) if len(tok) == 3 else 1.0
        if i == j:
            raise ParseError(path, lineno, f"self-loop on node {i}")
        if w < 0:
            raise ParseError(path, lineno, f"negative edge weight {w}")
        key = (min(i, j), max(i, j))
        if key in edges and edges[key] != w:
            raise ParseError(path, lineno, f"edge {key} repeated with a different weight")
        edges[key] = w
    return edges


def read_features(path):
    rows = {}
    d = None
    for lineno, tok in _read_rows(path):
        if len(tok) < 2:
            raise ParseError(path, lineno, "expected 'i v1 ... vd'")
        i = _int(tok[0], path, lineno, "node id")
        vals = [_float(t, path, lineno) for t in tok[1:]]
        if d is None:
            d = len(vals)
        elif len(vals) != d:
            raise ParseError(path, lineno, f"row has {len(vals)} features, expected {d}")
        if i in rows:
            raise ParseError(path, lineno, f"node {i} listed twice")
        rows[i] = vals
    return rows


def read_labels(path):
    labels = {}
    for lineno, tok in _read_rows(path):
        if len(tok) != 2:
            raise ParseError(path, lineno, "expected 'i c'")
        i = _int(tok[0], path, lineno, "node id")
        c = _int(tok[1], path, lineno, "class")
        if i in labels:
            raise ParseError(path, lineno, f"node {i} listed twice")
        labels[i] = c
    return labels


def load_dataset(edge_file, feature_file, label_file, split=(0.8, 0.1, 0.1), seed=0, name=None):
    """Read the three text files into a validated :class:`Dataset`.

    Node ids are remapped to ``0..n-1`` in ascending id order; the original ids
    are kept in ``Dataset.node_ids``.  Masks are drawn with
    :func:`stratified_masks` from ``seed``.
    """
    edges = read_edges(edge_file)
    feats = read_features(feature_file)
    labs = read_labels(label_file)
    if set(feats) != set(labs):
        raise ValidationError(
            f"feature file covers {len(feats)} nodes but label file covers {len(labs)}; "
            "both must list the same node ids"
        )
    ids = np.array(sorted(feats), dtype=np.int64)
    index = {int(v): k for k, v in enumerate(ids)}
    unknown = sorted({v for e in edges for v in e} - set(index))
    if unknown:
        raise ValidationError(f"edge file references nodes without features/labels: {unknown[:10]}")

    n = ids.shape[0]
    y = np.array([labs[int(v)] for v in ids], dtype=np.int64)
    C = int(y.max()) + 1 if n else 0
    missing = sorted(set(range(C)) - set(y.tolist()))
    if missing:
        raise ValidationError(f"class indices must be dense in [0, {C}); missing {missing}")
    X = np.array([feats[int(v)] for v in ids], dtype=np.float64)
    A = np.zeros((n, n))
    for (i, j), w in edges.items():
        a, b = index[i], index[j]
        A[a, b] = A[b, a] = w

    train, val, test = stratified_masks(y, split, np.random.default_rng(seed), num_classes=C)
    return Dataset(A=A, X=X, labels=LabelVector(y, train, val, test, C),
                   name=name or Path(edge_file).stem, node_ids=ids)


def save_dataset(ds, edge_file, feature_file, label_file):
    """Write canonical text files: edges sorted by ``(min, max)`` id pair."""
    ids = ds.node_ids
    iu, ju = np.nonzero(np.triu(ds.A, 1))
    lines = sorted((int(ids[a]), int(ids[b]), float(ds.A[a, b])) for a, b in zip(iu, ju))
    with open(edge_file, "w", encoding="utf-8", newline="\n") as fh:
        for i, j, w in lines:
            fh.write(f"{i} {j} {w!r}\n")
    with open(feature_file, "w", encoding="utf-8", newline="\n") as fh:
        for k in np.argsort(ids, kind="stable"):
            fh.write(" ".join([str(int(ids[k]))] + [repr(float(v)) for v in ds.X[k]]) + "\n")
    with open(label_file, "w", encoding="utf-8", newline="\n") as fh:
        for k in np.argsort(ids, kind="stable"):
            fh.write(f"{int(ids[k])} {int(ds.labels.labels[k])}\n")
