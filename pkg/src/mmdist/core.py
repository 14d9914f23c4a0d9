"""Finite metric-measure spaces: core types, validation, scaling, couplings, I/O.

The objects here are small and immutable.  A space is a tuple of point labels,
nonnegative atom weights and a semimetric matrix.  A coupling is a nonnegative
matrix whose marginals match two weight vectors of equal total mass; it is the
finite stand-in for a pair of measure-preserving parametrizations of the two
spaces over a common mass interval, recorded through the masses of their cell
intersections.  Pulling the two semimetrics back onto the support cells of a
coupling yields a :class:`SemiDistancePair`, which is what every solver in
this package actually works on.

Zero-weight points are kept in storage but excluded from supports; all
comparisons between spaces are meant up to relabeling of the support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpaceError, SpaceFormatError

#: absolute tolerance for mass bookkeeping (marginals, totals)
MASS_TOL = 1e-12
#: absolute tolerance for metric invariants (symmetry, diagonal, triangle)
METRIC_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMMSpace:
    """A finite weighted point set with a semimetric matrix.

    ``weights[i]`` is the mass of the atom at point ``labels[i]`` and
    ``dist[i, j]`` the distance between points ``i`` and ``j``.  Instances are
    immutable; use :func:`mm_space` to construct a validated space.
    """

    labels: tuple[str, ...]
    weights: np.ndarray
    dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "weights", _readonly(self.weights))
        object.__setattr__(self, "dist", _readonly(self.dist))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def support(self) -> np.ndarray:
        """Indices of points with strictly positive mass."""
        return np.flatnonzero(self.weights > 0.0)

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"FiniteMMSpace(n={self.n}, mass={self.total_mass:.6g})"


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`; empty ``violations`` means a valid space."""

    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(space: FiniteMMSpace, *, tol: float = METRIC_TOL) -> ValidationReport:
    """Check every structural invariant of a finite mm-space.

    All violations are reported, none raised; loaders and factories turn a
    non-empty report into :class:`InvalidSpaceError`.
    """
    v: list[str] = []
    n = space.n
    if n < 1:
        v.append("space must contain at least one point")
        return ValidationReport(tuple(v))
    if len(set(space.labels)) != n:
        v.append("labels are not unique")
    if space.weights.shape != (n,):
        v.append(f"weights has shape {space.weights.shape}, expected ({n},)")
        return ValidationReport(tuple(v))
    if space.dist.shape != (n, n):
        v.append(f"dist has shape {space.dist.shape}, expected ({n}, {n})")
        return ValidationReport(tuple(v))
    if not np.all(np.isfinite(space.weights)):
        v.append("weights contain non-finite entries")
    elif np.any(space.weights < 0.0):
        bad = np.flatnonzero(space.weights < 0.0)
        v.append(f"negative weight at index {bad[0]}")
    if not np.all(np.isfinite(space.dist)):
        v.append("dist contains non-finite entries")
        return ValidationReport(tuple(v))
    if np.any(space.dist < -tol):
        v.append("dist contains negative entries")
    asym = np.max(np.abs(space.dist - space.dist.T))
    if asym > tol:
        i, j = np.unravel_index(
            np.argmax(np.abs(space.dist - space.dist.T)), space.dist.shape
        )
        v.append(f"dist is asymmetric at ({i}, {j}): |d_ij - d_ji| = {asym:.3g}")
    diag = np.max(np.abs(np.diag(space.dist)))
    if diag > tol:
        v.append(f"dist diagonal is not zero (max {diag:.3g})")
    # triangle inequality over all ordered triples
    d = space.dist
    tri = d[:, None, :] + d.T[None, :, :]  # tri[i, j, k] = d_ik + d_kj
    worst = float((d[:, :, None] - tri).max())
    if worst > tol:
        v.append(f"triangle inequality violated by {worst:.3g}")
    if np.all(space.weights <= 0.0) or float(space.weights.sum()) <= 0.0:
        v.append("total mass must be positive")
    return ValidationReport(tuple(v))


def mm_space(weights, dist, labels=None) -> FiniteMMSpace:
    """Build and validate a finite mm-space; raise on any invariant violation."""
    w = np.asarray(weights, dtype=float)
    if labels is None:
        labels = tuple(f"p{i}" for i in range(len(w)))
    space = FiniteMMSpace(tuple(labels), w, np.asarray(dist, dtype=float))
    report = validate(space)
    if not report.ok:
        raise InvalidSpaceError("; ".join(report.violations))
    return space


def spaces_equal(a: FiniteMMSpace, b: FiniteMMSpace, tol: float = MASS_TOL) -> bool:
    """Entrywise equality of labels, weights and distances within ``tol``."""
    return (
        a.labels == b.labels
        and a.weights.shape == b.weights.shape
        and a.dist.shape == b.dist.shape
        and float(np.max(np.abs(a.weights - b.weights), initial=0.0)) <= tol
        and float(np.max(np.abs(a.dist - b.dist), initial=0.0)) <= tol
    )


def scale_measure(space: FiniteMMSpace, alpha: float) -> FiniteMMSpace:
    """Multiply every atom mass by ``alpha`` > 0, leaving distances untouched."""
    if not (alpha > 0.0):
        raise ValueError(f"measure scale factor must be positive, got {alpha}")
    return FiniteMMSpace(space.labels, space.weights * alpha, space.dist)


def normalized(space: FiniteMMSpace) -> FiniteMMSpace:
    """Rescale the measure to total mass one."""
    return scale_measure(space, 1.0 / space.total_mass)


def metric_closure(d: np.ndarray) -> np.ndarray:
    """Shortest-path (Floyd-Warshall) closure of a symmetric defect matrix.

    The closure is the largest pseudometric below ``d``; a function is
    1-Lipschitz for ``d`` exactly when it is 1-Lipschitz for the closure.
    """
    out = np.array(d, dtype=float)
    n = out.shape[0]
    for k in range(n):
        np.minimum(out, out[:, k : k + 1] + out[k : k + 1, :], out=out)
    return out


# ---------------------------------------------------------------------------
# couplings


@dataclass(frozen=True, eq=False)
class Coupling:
    """A nonnegative matrix with prescribed row and column marginals.

    ``pi[i, j]`` is the mass shared by point ``i`` of the first space and
    point ``j`` of the second.  Rows must sum to ``row_weights`` and columns
    to ``col_weights``; both weight vectors must carry the same total mass.
    """

    pi: np.ndarray
    row_weights: np.ndarray
    col_weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi", _readonly(self.pi))
        object.__setattr__(self, "row_weights", _readonly(self.row_weights))
        object.__setattr__(self, "col_weights", _readonly(self.col_weights))

    @property
    def total_mass(self) -> float:
        return float(self.pi.sum())

    def marginal_violations(self, tol: float = MASS_TOL) -> list[str]:
        v = []
        if np.any(self.pi < -tol):
            v.append("coupling has negative entries")
        row_err = float(np.max(np.abs(self.pi.sum(axis=1) - self.row_weights), initial=0.0))
        col_err = float(np.max(np.abs(self.pi.sum(axis=0) - self.col_weights), initial=0.0))
        if row_err > tol:
            v.append(f"row marginals off by {row_err:.3g}")
        if col_err > tol:
            v.append(f"column marginals off by {col_err:.3g}")
        return v


def _require_equal_mass(X: FiniteMMSpace, Y: FiniteMMSpace, tol: float = 1e-9):
    if abs(X.total_mass - Y.total_mass) > tol:
        raise ValueError(
            f"coupled spaces must carry equal total mass "
            f"({X.total_mass:.12g} vs {Y.total_mass:.12g}); scale first"
        )


def coupling_from_matrix(X: FiniteMMSpace, Y: FiniteMMSpace, pi, *, tol: float = 1e-9) -> Coupling:
    """Wrap a matrix as a coupling of ``X`` and ``Y``, checking marginals."""
    c = Coupling(np.asarray(pi, dtype=float), X.weights, Y.weights)
    bad = c.marginal_violations(tol)
    if bad:
        raise ValueError("not a coupling of the given spaces: " + "; ".join(bad))
    return c


def diagonal_coupling(X: FiniteMMSpace) -> Coupling:
    """The coupling of a space with itself that keeps every atom in place."""
    return Coupling(np.diag(X.weights), X.weights, X.weights)


def product_coupling(X: FiniteMMSpace, Y: FiniteMMSpace) -> Coupling:
    """Independent coupling ``w_X w_Y^T / m`` of two equal-mass spaces."""
    _require_equal_mass(X, Y)
    pi = np.outer(X.weights, Y.weights) / X.total_mass
    return Coupling(pi, X.weights, Y.weights)


def matching_coupling(X: FiniteMMSpace, Y: FiniteMMSpace, mapping, *, tol: float = 1e-9) -> Coupling:
    """Coupling concentrated on the graph of a weight-preserving point map.

    ``mapping[i]`` is the index in ``Y`` receiving all mass of point ``i``;
    the map must preserve atom weights for the result to be a coupling.
    """
    _require_equal_mass(X, Y, tol)
    pi = np.zeros((X.n, Y.n))
    for i, j in enumerate(mapping):
        pi[i, int(j)] += X.weights[i]
    return coupling_from_matrix(X, Y, pi, tol=tol)


def northwest_coupling(
    X: FiniteMMSpace, Y: FiniteMMSpace, row_order=None, col_order=None
) -> Coupling:
    """A vertex of the transportation polytope obtained by greedy filling.

    Filling follows ``row_order`` and ``col_order`` (defaults: ascending), so
    permuting the orders sweeps through the polytope's extreme points.
    """
    _require_equal_mass(X, Y)
    from .transport import northwest_plan  # local import avoids a cycle

    pi = northwest_plan(X.weights, Y.weights, row_order, col_order)
    return Coupling(pi, X.weights, Y.weights)


def random_coupling(X: FiniteMMSpace, Y: FiniteMMSpace, rng: np.random.Generator, mix: int = 3) -> Coupling:
    """Random coupling: a convex mix of ``mix`` random transportation vertices."""
    _require_equal_mass(X, Y)
    from .transport import northwest_plan

    coeffs = rng.dirichlet(np.ones(mix))
    pi = np.zeros((X.n, Y.n))
    for c in coeffs:
        pi += c * northwest_plan(
            X.weights, Y.weights, rng.permutation(X.n), rng.permutation(Y.n)
        )
    return Coupling(pi, X.weights, Y.weights)


# ---------------------------------------------------------------------------
# pulled-back semimetric pairs


@dataclass(frozen=True, eq=False)
class SemiDistancePair:
    """Two symmetric zero-diagonal matrices over one weighted index set.

    The triangle inequality is deliberately not required: instances arise as
    pullbacks of metrics onto coupling cells (those do satisfy it) but the
    solvers only rely on symmetry and the zero diagonal.
    """

    weights: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    labels: tuple = ()
    cells: tuple | None = None  # (i, j) provenance indices when pulled back

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights))
        object.__setattr__(self, "d1", _readonly(self.d1))
        object.__setattr__(self, "d2", _readonly(self.d2))
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(str(i) for i in range(len(self.weights)))
            )

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)


def validate_pair(pair: SemiDistancePair, *, tol: float = METRIC_TOL) -> ValidationReport:
    v = []
    n = pair.n
    for name, d in (("d1", pair.d1), ("d2", pair.d2)):
        if d.shape != (n, n):
            v.append(f"{name} has shape {d.shape}, expected ({n}, {n})")
            continue
        if float(np.max(np.abs(d - d.T), initial=0.0)) > tol:
            v.append(f"{name} is not symmetric")
        if float(np.max(np.abs(np.diag(d)), initial=0.0)) > tol:
            v.append(f"{name} has nonzero diagonal")
        if np.any(d < -tol):
            v.append(f"{name} has negative entries")
    if np.any(pair.weights < 0.0):
        v.append("negative cell mass")
    return ValidationReport(tuple(v))


def semidist_pair(weights, d1, d2, labels=()) -> SemiDistancePair:
    pair = SemiDistancePair(np.asarray(weights, float), np.asarray(d1, float), np.asarray(d2, float), tuple(labels))
    report = validate_pair(pair)
    if not report.ok:
        raise ValueError("; ".join(report.violations))
    return pair


def pullback_pair(
    X: FiniteMMSpace, Y: FiniteMMSpace, pi: Coupling, *, tol: float = 1e-9
) -> SemiDistancePair:
    """Pull both metrics back onto the support cells of a coupling.

    Cell ``(i, j)`` carries mass ``pi[i, j]``; between two cells the first
    matrix reads the distance in ``X`` and the second the distance in ``Y``.
    Zero-mass cells do not appear.
    """
    if pi.pi.shape != (X.n, Y.n):
        raise ValueError(f"coupling shape {pi.pi.shape} does not match ({X.n}, {Y.n})")
    row_err = float(np.max(np.abs(pi.pi.sum(axis=1) - X.weights), initial=0.0))
    col_err = float(np.max(np.abs(pi.pi.sum(axis=0) - Y.weights), initial=0.0))
    if row_err > tol or col_err > tol:
        raise ValueError(
            f"coupling marginals do not match the spaces (row off {row_err:.3g}, "
            f"col off {col_err:.3g})"
        )
    ii, jj = np.nonzero(pi.pi > 0.0)
    w = pi.pi[ii, jj]
    labels = tuple((X.labels[i], Y.labels[j]) for i, j in zip(ii, jj))
    return SemiDistancePair(
        w,
        X.dist[np.ix_(ii, ii)],
        Y.dist[np.ix_(jj, jj)],
        labels,
        cells=tuple((int(i), int(j)) for i, j in zip(ii, jj)),
    )


# ---------------------------------------------------------------------------
# witnesses of almost-isometry (shared record; searched for in mmdist.limits)


@dataclass(frozen=True, eq=False)
class Witness:
    """An almost-isometry certificate between two spaces.

    ``p[i]`` maps point ``i`` of the first space to a point index of the
    second, ``subset`` lists the retained first-space points, and ``eps``
    bounds both the discarded mass and the pairwise distance distortion of
    ``p`` on the retained set.
    """

    p: np.ndarray
    subset: np.ndarray
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.array(self.p, dtype=int))
        object.__setattr__(self, "subset", np.array(sorted(int(i) for i in self.subset), dtype=int))
        object.__setattr__(self, "eps", float(self.eps))

    def violations(self, Xn: FiniteMMSpace, X: FiniteMMSpace, tol: float = 1e-9) -> list[str]:
        v = []
        if len(self.p) != Xn.n:
            v.append("map length does not match the first space")
            return v
        if np.any(self.p < 0) or np.any(self.p >= X.n):
            v.append("map has out-of-range targets")
            return v
        keep = np.zeros(Xn.n, dtype=bool)
        keep[self.subset] = True
        dropped = float(Xn.weights[~keep].sum())
        if dropped > self.eps + tol:
            v.append(f"dropped mass {dropped:.6g} exceeds eps {self.eps:.6g}")
        s = self.subset
        if len(s) >= 2:
            dn = Xn.dist[np.ix_(s, s)]
            dx = X.dist[np.ix_(self.p[s], self.p[s])]
            distortion = float(np.max(np.abs(dn - dx)))
            if distortion > self.eps + tol:
                v.append(f"distortion {distortion:.6g} exceeds eps {self.eps:.6g}")
        return v


# ---------------------------------------------------------------------------
# file format


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any double exactly
    return format(float(x), ".17g")


def write_space(path, space: FiniteMMSpace) -> None:
    """Write a space as JSON with full-precision numbers."""
    report = validate(space)
    if not report.ok:
        raise InvalidSpaceError("refusing to write an invalid space: " + "; ".join(report.violations))
    labels = json.dumps(list(space.labels))
    weights = "[" + ", ".join(_fmt(x) for x in space.weights) + "]"
    rows = ",\n    ".join(
        "[" + ", ".join(_fmt(x) for x in row) + "]" for row in space.dist
    )
    text = (
        "{\n"
        f'  "labels": {labels},\n'
        f'  "weights": {weights},\n'
        f'  "dist": [\n    {rows}\n  ]\n'
        "}\n"
    )
    Path(path).write_text(text, encoding="utf-8")


def read_space(path, *, check: bool = True) -> FiniteMMSpace:
    """Read a space file; see :func:`write_space` for the schema.

    With ``check`` (the default) invariant violations raise
    :class:`InvalidSpaceError`; structural problems always raise
    :class:`SpaceFormatError`.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpaceFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SpaceFormatError(f"{path}: expected a JSON object")
    missing = {"labels", "weights", "dist"} - set(doc)
    if missing:
        raise SpaceFormatError(f"{path}: missing keys {sorted(missing)}")
    labels = doc["labels"]
    weights = doc["weights"]
    dist = doc["dist"]
    if not isinstance(labels, list) or not isinstance(weights, list) or not isinstance(dist, list):
        raise SpaceFormatError(f"{path}: labels, weights and dist must be arrays")
    n = len(labels)
    if len(weights) != n:
        raise SpaceFormatError(f"{path}: {n} labels but {len(weights)} weights")
    if len(dist) != n or any(not isinstance(r, list) or len(r) != n for r in dist):
        raise SpaceFormatError(f"{path}: dist must be a {n}x{n} matrix")
    try:
        w = np.array(weights, dtype=float)
        d = np.array(dist, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpaceFormatError(f"{path}: non-numeric entry ({exc})") from exc
    if not check:
        return FiniteMMSpace(tuple(str(x) for x in labels), w, d)
    return mm_space(w, d, labels)
