"""Data model for block-partitioned entropy inequality problems.

A datum bundles the four ingredients of an inequality of the form

    sum_i d_i h(X_i)  <=  sum_j c_j h(A_j X) + M,

namely the linear maps ``A_j`` with exponents ``c_j``, and a block
partition ``r = (r_1, ..., r_k)`` of the ambient dimension with exponents
``d_i``.  The classical entropy power inequality, the subadditivity form
of the Brascamp-Lieb inequality, and the Zamir-Feder inequality all fit
this shape; dedicated constructors build each of them, plus the
three-variable "coupled sums" family (X1 + Y, X2 + Y).

All types are immutable after construction and safe to share across
threads.  Construction is deliberately lenient: semantic problems
(rank deficits, shape mismatches, negative exponents) are reported by
:func:`validate`, never raised, so that files describing broken data can
still be loaded and diagnosed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "Partition",
    "Datum",
    "Issue",
    "ValidationReport",
    "DatumParseError",
    "validate",
    "make_epi_datum",
    "make_zamir_feder_datum",
    "make_coupled_sums_datum",
    "save",
    "load",
]

FORMAT_TAG = "blepi-datum/1"


def _frozen_array(a, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Partition:
    """Ordered block sizes ``(r_1, ..., r_k)`` of an n-dimensional space."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if len(blocks) < 1:
            raise ValueError("partition needs at least one block")
        if any(b < 1 for b in blocks):
            raise ValueError(f"block sizes must be >= 1, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(self.blocks)

    def offsets(self) -> list[tuple[int, int]]:
        """Half-open index range of each block inside R^n."""
        out, start = [], 0
        for b in self.blocks:
            out.append((start, start + b))
            start += b
        return out


@dataclass(frozen=True)
class Datum:
    """An inequality datum: partition, maps ``A_j``, exponents ``c_j`` and ``d_i``.

    ``maps[j]`` has shape ``(n_j, n)`` and is expected (but not required at
    construction time) to have full row rank; ``c`` has one nonnegative
    entry per map and ``d`` one per partition block.  Run :func:`validate`
    to check the expectations.
    """

    partition: Partition
    maps: tuple[np.ndarray, ...]
    c: np.ndarray
    d: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        maps = tuple(_frozen_array(A, ndim=2) for A in self.maps)
        if len(maps) < 1:
            raise ValueError("need at least one linear map")
        c = _frozen_array(self.c, ndim=1)
        d = _frozen_array(self.d, ndim=1)
        if len(c) != len(maps):
            raise ValueError(f"{len(maps)} maps but {len(c)} c-exponents")
        if len(d) != self.partition.k:
            raise ValueError(f"{self.partition.k} blocks but {len(d)} d-exponents")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def k(self) -> int:
        return self.partition.k

    @property
    def image_dims(self) -> tuple[int, ...]:
        return tuple(A.shape[0] for A in self.maps)

    def __eq__(self, other):
        if not isinstance(other, Datum):
            return NotImplemented
        return (
            self.partition == other.partition
            and len(self.maps) == len(other.maps)
            and all(
                A.shape == B.shape and np.array_equal(A, B)
                for A, B in zip(self.maps, other.maps)
            )
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.d, other.d)
        )

    def __hash__(self):
        return hash((self.partition, tuple(A.shape for A in self.maps)))


class Issue(NamedTuple):
    code: str
    message: str
    location: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def ok(self) -> bool:
        return len(self.issues) == 0

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {"code": i.code, "message": i.message, "location": i.location}
                for i in self.issues
            ],
        }


def validate(datum: Datum) -> ValidationReport:
    """Check every datum invariant and report all violations.

    Checks, per map: column count equals n (DIMENSION_MISMATCH), at least
    one output row (EMPTY_IMAGE), full numerical row rank (SURJECTIVITY).
    Exponents must be nonnegative (NEGATIVE_EXPONENT).  Rank uses the
    standard SVD tolerance max(shape) * eps * sigma_max.
    """
    issues: list[Issue] = []
    n = datum.n
    for j, A in enumerate(datum.maps):
        loc = f"maps[{j}]"
        nj = A.shape[0]
        if A.shape[1] != n:
            issues.append(
                Issue(
                    "DIMENSION_MISMATCH",
                    f"map has {A.shape[1]} columns, partition total is {n}",
                    loc,
                )
            )
            continue
        if nj == 0:
            issues.append(Issue("EMPTY_IMAGE", "map has zero output dimension", loc))
            continue
        if not np.all(np.isfinite(A)):
            issues.append(Issue("NONFINITE_ENTRY", "map has non-finite entries", loc))
            continue
        if np.linalg.matrix_rank(A) < nj:
            issues.append(
                Issue(
                    "SURJECTIVITY",
                    f"map has numerical rank < {nj}, not surjective",
                    loc,
                )
            )
    for j, cj in enumerate(datum.c):
        if cj < 0:
            issues.append(Issue("NEGATIVE_EXPONENT", f"c[{j}] = {cj} < 0", f"c[{j}]"))
    for i, di in enumerate(datum.d):
        if di < 0:
            issues.append(Issue("NEGATIVE_EXPONENT", f"d[{i}] = {di} < 0", f"d[{i}]"))
    return ValidationReport(tuple(issues))


# ---------------------------------------------------------------------------
# constructors for the named families
# ---------------------------------------------------------------------------


def make_epi_datum(lam: float, dim: int) -> Datum:
    """Datum whose optimal constant expresses the entropy power inequality.

    Two independent dim-dimensional blocks with exponents (lam, 1-lam) and
    the single map [sqrt(lam) I | sqrt(1-lam) I] with exponent 1.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in the open interval (0, 1), got {lam}")
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    eye = np.eye(dim)
    A = np.hstack([math.sqrt(lam) * eye, math.sqrt(1.0 - lam) * eye])
    return Datum(
        partition=Partition((dim, dim)),
        maps=(A,),
        c=np.array([1.0]),
        d=np.array([lam, 1.0 - lam]),
        metadata={"family": "epi", "lambda": lam, "dim": dim},
    )


def make_zamir_feder_datum(A, tol: float = 1e-9) -> Datum:
    """Datum for the Zamir-Feder inequality: h(AX) >= sum_j alpha_j^2 h(X_j).

    Requires ``A A^T = I`` within ``tol``.  Each coordinate is its own
    block and the block exponent is the squared norm of the matching
    column of A.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be a 2-d matrix")
    gram = A @ A.T
    if not np.allclose(gram, np.eye(A.shape[0]), atol=tol):
        raise ValueError("rows of A are not orthonormal (A A^T != I)")
    alpha_sq = np.sum(A * A, axis=0)
    return Datum(
        partition=Partition((1,) * A.shape[1]),
        maps=(A,),
        c=np.array([1.0]),
        d=alpha_sq,
        metadata={"family": "zamir_feder"},
    )


def make_coupled_sums_datum(
    alpha: float, beta: float, delta1: float, delta2: float
) -> Datum:
    """Datum for lower-bounding h(X1 + Y, X2 + Y) with (X1, X2) independent of Y.

    Blocks are the pair (X1, X2) in R^2 with exponent alpha and the scalar
    Y with exponent beta.  The maps are the coupled sum [X1+Y, X2+Y] with
    exponent 1 and the two coordinate projections onto X1 and X2 with
    exponents delta1, delta2.  Maps with zero exponent are retained:
    whether an exponent is zero matters for the finiteness boundary
    analysis, so they are not silently dropped.

    Feasibility of (alpha, beta, delta1, delta2) is a separate question,
    answered by :func:`blepi.closed_forms.coupled_sums_feasible`.
    """
    vals = {"alpha": alpha, "beta": beta, "delta1": delta1, "delta2": delta2}
    for name, v in vals.items():
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")
    A1 = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    A2 = np.array([[1.0, 0.0, 0.0]])
    A3 = np.array([[0.0, 1.0, 0.0]])
    return Datum(
        partition=Partition((2, 1)),
        maps=(A1, A2, A3),
        c=np.array([1.0, float(delta1), float(delta2)]),
        d=np.array([float(alpha), float(beta)]),
        metadata={"family": "coupled_sums", **{k: float(v) for k, v in vals.items()}},
    )


# ---------------------------------------------------------------------------
# serialization: a single JSON document, matrices row-major with shape
# ---------------------------------------------------------------------------


class DatumParseError(ValueError):
    """Raised when a datum file is syntactically or structurally malformed."""


def datum_to_dict(datum: Datum) -> dict:
    return {
        "format": FORMAT_TAG,
        "partition": list(datum.partition.blocks),
        "maps": [
            {"shape": list(A.shape), "data": [float(x) for x in A.ravel(order="C")]}
            for A in datum.maps
        ],
        "c": [float(x) for x in datum.c],
        "d": [float(x) for x in datum.d],
        "metadata": datum.metadata,
    }


def datum_from_dict(doc: dict) -> Datum:
    if not isinstance(doc, dict):
        raise DatumParseError("top-level document must be an object")
    for key in ("partition", "maps", "c", "d"):
        if key not in doc:
            raise DatumParseError(f"missing required field '{key}'")
    try:
        partition = Partition(tuple(int(b) for b in doc["partition"]))
    except (TypeError, ValueError) as exc:
        raise DatumParseError(f"bad 'partition' field: {exc}") from exc
    maps = []
    for j, entry in enumerate(doc["maps"]):
        try:
            rows, cols = (int(s) for s in entry["shape"])
            data = np.array(entry["data"], dtype=float)
            maps.append(data.reshape(rows, cols))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatumParseError(f"bad 'maps[{j}]' entry: {exc}") from exc
    try:
        c = np.array(doc["c"], dtype=float)
        d = np.array(doc["d"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise DatumParseError(f"bad exponent list: {exc}") from exc
    try:
        return Datum(
            partition=partition,
            maps=tuple(maps),
            c=c,
            d=d,
            metadata=doc.get("metadata", {}),
        )
    except ValueError as exc:
        raise DatumParseError(str(exc)) from exc


def save(datum: Datum, path) -> None:
    """Write a datum as a human-diffable JSON document."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(datum_to_dict(datum), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load(path) -> Datum:
    """Read a datum file.  Parse problems raise :class:`DatumParseError`;
    semantic problems (negative exponents, rank deficits) do not -- run
    :func:`validate` on the result to collect those."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatumParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return datum_from_dict(doc)
