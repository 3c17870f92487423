"""Finite-dimensional C*-algebras and their levelled (inductive-stage) models.

A ``BaseAlgebra`` is a direct sum of full matrix blocks; its elements are
dense block-diagonal complex matrices.  A levelled model describes a
commutative diagonal algebra at finite stage, tensored with a base algebra:
elements are coefficient dictionaries keyed by the atoms (minimal projections
of the diagonal part) of a depth-tagged catalog, with values in the base
algebra.  Refining an element to a deeper catalog is a unital injective
*-homomorphism; all arithmetic is performed after refining both operands to a
common depth, so products and sums are exact.

Atom catalogs
-------------
* abelian Toeplitz model of rank m: atoms are m-tuples with coordinate i in
  ``0..d_i``; the value ``d_i`` marks the tail of the half-line at stage
  ``d_i``, smaller values are point masses.  Depth is a per-coordinate tuple,
  the m-fold tensor of the rank-1 model.
* free Toeplitz model of rank k: defect atoms ``("d", w)`` for words shorter
  than the depth (point mass at the finite word w) plus leaf cylinders
  ``("c", w)`` at word length == depth.
* free boundary model of rank k: leaf cylinders only (the space of infinite
  words at stage d).
* point model: a single trivial atom; elements are bare base-algebra
  matrices.  Used for systems acting on a fixed finite-dimensional algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import SpecMismatchError

Complex = np.complex128


# ---------------------------------------------------------------------------
# Base algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseAlgebra:
    """Direct sum of full matrix algebras, one dense block per summand."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        if not self.blocks or any(
            not isinstance(n, int) or n < 1 for n in self.blocks
        ):
            raise SpecMismatchError(f"invalid block dimensions {self.blocks!r}")

    @property
    def dim(self) -> int:
        return sum(self.blocks)

    @property
    def linear_dim(self) -> int:
        return sum(n * n for n in self.blocks)

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for n in self.blocks:
            out.append(slice(start, start + n))
            start += n
        return out

    def unit(self) -> np.ndarray:
        return np.eye(self.dim, dtype=Complex)

    def zero(self) -> np.ndarray:
        return np.zeros((self.dim, self.dim), dtype=Complex)

    def basis(self) -> list[np.ndarray]:
        """Matrix units of every block, ordered block-major then row-major."""
        out = []
        for sl in self.block_slices():
            for i in range(sl.start, sl.stop):
                for j in range(sl.start, sl.stop):
                    e = self.zero()
                    e[i, j] = 1.0
                    out.append(e)
        return out

    def basis_labels(self) -> list[str]:
        out = []
        for b, sl in enumerate(self.block_slices()):
            n = sl.stop - sl.start
            for i in range(n):
                for j in range(n):
                    out.append(f"b{b}e{i + 1}{j + 1}" if n > 1 else f"b{b}e11")
        return out

    def is_member(self, mat: np.ndarray, tol: float = 1e-12) -> bool:
        """True when all mass sits inside the diagonal blocks."""
        mat = np.asarray(mat)
        if mat.shape != (self.dim, self.dim):
            return False
        mask = np.ones((self.dim, self.dim), dtype=bool)
        for sl in self.block_slices():
            mask[sl, sl] = False
        off = np.abs(mat[mask]).max() if mask.any() else 0.0
        scale = max(1.0, np.abs(mat).max())
        return bool(off <= tol * scale)

    def coefficients(self, mat: np.ndarray) -> np.ndarray:
        """Coordinates of ``mat`` in the matrix-unit basis (just its entries)."""
        coeffs = []
        for sl in self.block_slices():
            coeffs.append(np.asarray(mat)[sl, sl].reshape(-1))
        return np.concatenate(coeffs)


def operator_norm(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat, 2)) if mat.size else 0.0


# ---------------------------------------------------------------------------
# Atom models
# ---------------------------------------------------------------------------

Atom = tuple
Depth = Union[int, tuple[int, ...]]


class AbelianToeplitzModel:
    """Diagonal model for the free abelian monoid: stage algebras of the
    one-point-compactified half-line, tensored coordinatewise."""

    kind = "toeplitz_abelian"

    def __init__(self, rank: int):
        if rank < 1:
            raise SpecMismatchError("rank must be >= 1")
        self.rank = rank

    def zero_depth(self) -> Depth:
        return (0,) * self.rank

    def normalize_depth(self, depth) -> Depth:
        if isinstance(depth, int):
            return (depth,) * self.rank
        depth = tuple(int(d) for d in depth)
        if len(depth) != self.rank or any(d < 0 for d in depth):
            raise SpecMismatchError(f"bad depth {depth!r}")
        return depth

    def join_depth(self, d1: Depth, d2: Depth) -> Depth:
        return tuple(max(a, b) for a, b in zip(d1, d2))

    def depth_leq(self, d1: Depth, d2: Depth) -> bool:
        return all(a <= b for a, b in zip(d1, d2))

    def depth_max(self, depth: Depth) -> int:
        return max(depth)

    def atoms(self, depth: Depth) -> list[Atom]:
        depth = self.normalize_depth(depth)
        return list(itertools.product(*(range(d + 1) for d in depth)))

    def refine_once(self, coeffs: dict, depth: Depth, coord: int) -> tuple[dict, Depth]:
        """Split the tail of one coordinate: tail(d) -> point(d) + tail(d+1)."""
        d = depth[coord]
        new: dict = {}
        for atom, val in coeffs.items():
            if atom[coord] == d:
                stay = atom
                split = atom[:coord] + (d + 1,) + atom[coord + 1:]
                new[stay] = val
                new[split] = val
            else:
                new[atom] = val
        ndepth = depth[:coord] + (d + 1,) + depth[coord + 1:]
        return new, ndepth

    def refine_to(self, coeffs: dict, depth: Depth, target: Depth) -> dict:
        target = self.normalize_depth(target)
        if not self.depth_leq(depth, target):
            raise SpecMismatchError(f"cannot refine depth {depth} to {target}")
        cur = coeffs
        for coord in range(self.rank):
            while depth[coord] < target[coord]:
                cur, depth = self.refine_once(cur, depth, coord)
        return cur

    # -- generator action on atom keys (values untouched) -------------------

    def shift_atoms(self, coeffs: dict, depth: Depth, letter: int) -> tuple[dict, Depth]:
        """Translate coordinate ``letter-1`` by one step; depth grows there."""
        c = letter - 1
        new = {atom[:c] + (atom[c] + 1,) + atom[c + 1:]: v for atom, v in coeffs.items()}
        return new, depth[:c] + (depth[c] + 1,) + depth[c + 1:]

    def unshift_atoms(self, coeffs: dict, depth: Depth, letter: int) -> tuple[dict, Depth]:
        """Left inverse of ``shift_atoms``: mask the range projection, then
        translate back.  Atoms at coordinate value 0 are annihilated."""
        c = letter - 1
        if depth[c] < 1:
            coeffs = self.refine_to(coeffs, depth, depth[:c] + (1,) + depth[c + 1:])
            depth = depth[:c] + (1,) + depth[c + 1:]
        new = {}
        for atom, v in coeffs.items():
            if atom[c] >= 1:
                new[atom[:c] + (atom[c] - 1,) + atom[c + 1:]] = v
        return new, depth[:c] + (depth[c] - 1,) + depth[c + 1:]

def _words(rank: int, length: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, rank + 1), repeat=length))


class FreeToeplitzModel:
    """Diagonal model for the free monoid: defect atoms at interior words
    plus leaf cylinders at the truncation depth."""

    kind = "toeplitz_free"

    def __init__(self, rank: int):
        if rank < 1:
            raise SpecMismatchError("rank must be >= 1")
        self.rank = rank

    def zero_depth(self) -> Depth:
        return 0

    def normalize_depth(self, depth) -> Depth:
        d = int(depth)
        if d < 0:
            raise SpecMismatchError(f"bad depth {depth!r}")
        return d

    def join_depth(self, d1: int, d2: int) -> int:
        return max(d1, d2)

    def depth_leq(self, d1: int, d2: int) -> bool:
        return d1 <= d2

    def depth_max(self, depth: int) -> int:
        return depth

    def atoms(self, depth: int) -> list[Atom]:
        out: list[Atom] = []
        for n in range(depth):
            out.extend(("d", w) for w in _words(self.rank, n))
        out.extend(("c", w) for w in _words(self.rank, depth))
        return out

    def refine_once(self, coeffs: dict, depth: int) -> tuple[dict, int]:
        """Each leaf cylinder becomes its defect atom plus its children."""
        new: dict = {}

        def _acc(key, val):
            if key in new:
                new[key] = new[key] + val
            else:
                new[key] = val

        for (tag, w), val in coeffs.items():
            if tag == "d":
                _acc(("d", w), val)
            else:
                _acc(("d", w), val)
                for i in range(1, self.rank + 1):
                    _acc(("c", w + (i,)), val)
        return new, depth + 1

    def refine_to(self, coeffs: dict, depth: int, target: int) -> dict:
        if depth > target:
            raise SpecMismatchError(f"cannot refine depth {depth} to {target}")
        cur = coeffs
        while depth < target:
            cur, depth = self.refine_once(cur, depth)
        return cur

    def shift_atoms(self, coeffs: dict, depth: int, letter: int) -> tuple[dict, int]:
        new = {(tag, (letter,) + w): v for (tag, w), v in coeffs.items()}
        return new, depth + 1

    def unshift_atoms(self, coeffs: dict, depth: int, letter: int) -> tuple[dict, int]:
        if depth < 1:
            coeffs = self.refine_to(coeffs, depth, 1)
            depth = 1
        new = {}
        for (tag, w), v in coeffs.items():
            if w and w[0] == letter:
                new[(tag, w[1:])] = v
        return new, depth - 1

class FreeBoundaryModel(FreeToeplitzModel):
    """Boundary quotient of the free Toeplitz model: cylinders only, and a
    cylinder refines to the sum of its children."""

    kind = "boundary_free"

    def atoms(self, depth: int) -> list[Atom]:
        return [("c", w) for w in _words(self.rank, depth)]

    def refine_once(self, coeffs: dict, depth: int) -> tuple[dict, int]:
        new: dict = {}
        for (tag, w), val in coeffs.items():
            for i in range(1, self.rank + 1):
                key = ("c", w + (i,))
                new[key] = new[key] + val if key in new else val
        return new, depth + 1


class PointModel:
    """Trivial diagonal: the element is a single base-algebra matrix."""

    kind = "matrix"

    def __init__(self, rank: int):
        self.rank = rank

    def zero_depth(self) -> Depth:
        return 0

    def normalize_depth(self, depth) -> Depth:
        return 0

    def join_depth(self, d1, d2) -> int:
        return 0

    def depth_leq(self, d1, d2) -> bool:
        return True

    def depth_max(self, depth) -> int:
        return 0

    def atoms(self, depth) -> list[Atom]:
        return [()]

    def refine_to(self, coeffs: dict, depth, target) -> dict:
        return coeffs

    def shift_atoms(self, coeffs, depth, letter):
        return dict(coeffs), 0

    def unshift_atoms(self, coeffs, depth, letter):
        return dict(coeffs), 0

Model = Union[AbelianToeplitzModel, FreeToeplitzModel, FreeBoundaryModel, PointModel]

_MODEL_KINDS = {
    "toeplitz_abelian": AbelianToeplitzModel,
    "toeplitz_free": FreeToeplitzModel,
    "boundary_free": FreeBoundaryModel,
    "matrix": PointModel,
}


def model_from_kind(kind: str, rank: int) -> Model:
    try:
        cls = _MODEL_KINDS[kind]
    except KeyError:
        raise SpecMismatchError(f"unknown model kind {kind!r}") from None
    return cls(rank)


# ---------------------------------------------------------------------------
# Levelled elements
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LevelledElement:
    """Depth-tagged coefficient vector over the atoms of a levelled algebra.

    Treated as immutable: operations return fresh elements and never mutate
    coefficient arrays in place.
    """

    model: Model
    base: BaseAlgebra
    depth: Depth
    coeffs: dict

    # -- constructors --------------------------------------------------------

    @classmethod
    def unit(cls, model: Model, base: BaseAlgebra, depth=None) -> "LevelledElement":
        d = model.zero_depth() if depth is None else model.normalize_depth(depth)
        eye = base.unit()
        return cls(model, base, d, {atom: eye for atom in model.atoms(d)})

    @classmethod
    def zero(cls, model: Model, base: BaseAlgebra, depth=None) -> "LevelledElement":
        d = model.zero_depth() if depth is None else model.normalize_depth(depth)
        return cls(model, base, d, {})

    @classmethod
    def from_atom(
        cls, model: Model, base: BaseAlgebra, depth, atom: Atom, value: np.ndarray
    ) -> "LevelledElement":
        d = model.normalize_depth(depth)
        return cls(model, base, d, {atom: np.asarray(value, dtype=Complex)})

    @classmethod
    def from_matrix(cls, model: Model, base: BaseAlgebra, mat) -> "LevelledElement":
        """Embed a base-algebra matrix at depth zero (i.e. 1 (x) mat)."""
        mat = np.asarray(mat, dtype=Complex)
        d = model.zero_depth()
        return cls(model, base, d, {atom: mat for atom in model.atoms(d)})

    # -- structural helpers ---------------------------------------------------

    def _compat(self, other: "LevelledElement") -> None:
        if self.model is not other.model and (
            type(self.model) is not type(other.model)
            or self.model.rank != other.model.rank
        ):
            raise SpecMismatchError("elements live over different models")
        if self.base != other.base:
            raise SpecMismatchError("elements live over different base algebras")

    def refine_to(self, target) -> "LevelledElement":
        target = self.model.normalize_depth(target)
        coeffs = self.model.refine_to(self.coeffs, self.depth, target)
        return LevelledElement(self.model, self.base, target, coeffs)

    def common_depth(self, other: "LevelledElement"):
        return self.model.join_depth(self.depth, other.depth)

    def coefficient(self, atom: Atom) -> np.ndarray:
        return self.coeffs.get(atom, self.base.zero())

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other: "LevelledElement") -> "LevelledElement":
        self._compat(other)
        d = self.common_depth(other)
        a, b = self.refine_to(d), other.refine_to(d)
        out = dict(a.coeffs)
        for atom, v in b.coeffs.items():
            out[atom] = out[atom] + v if atom in out else v
        return LevelledElement(self.model, self.base, d, out)

    def __sub__(self, other: "LevelledElement") -> "LevelledElement":
        return self + (other * (-1.0))

    def __mul__(self, other) -> "LevelledElement":
        if np.isscalar(other):
            return LevelledElement(
                self.model, self.base, self.depth,
                {atom: other * v for atom, v in self.coeffs.items()},
            )
        self._compat(other)
        d = self.common_depth(other)
        a, b = self.refine_to(d), other.refine_to(d)
        # Atoms are orthogonal projections of the diagonal part, so the
        # product is atomwise in the base algebra.
        out = {}
        for atom, v in a.coeffs.items():
            w = b.coeffs.get(atom)
            if w is not None:
                out[atom] = v @ w
        return LevelledElement(self.model, self.base, d, out)

    def __rmul__(self, scalar) -> "LevelledElement":
        if np.isscalar(scalar):
            return self * scalar
        return NotImplemented

    def star(self) -> "LevelledElement":
        return LevelledElement(
            self.model, self.base, self.depth,
            {atom: v.conj().T for atom, v in self.coeffs.items()},
        )

    def norm(self) -> float:
        if not self.coeffs:
            return 0.0
        return max(operator_norm(v) for v in self.coeffs.values())

    def prune(self, tol: float = 0.0) -> "LevelledElement":
        kept = {a: v for a, v in self.coeffs.items() if np.abs(v).max() > tol}
        return LevelledElement(self.model, self.base, self.depth, kept)

    def allclose(self, other: "LevelledElement", tol: float = 1e-10) -> bool:
        return (self - other).norm() <= tol

    # -- vectorization -----------------------------------------------------------

    def vec(self, depth=None) -> np.ndarray:
        """Flatten to a complex vector in the fixed catalog order at ``depth``."""
        x = self if depth is None else self.refine_to(depth)
        atoms = x.model.atoms(x.depth)
        n = self.base.dim
        out = np.zeros(len(atoms) * n * n, dtype=Complex)
        for k, atom in enumerate(atoms):
            v = x.coeffs.get(atom)
            if v is not None:
                out[k * n * n: (k + 1) * n * n] = np.asarray(v).reshape(-1)
        return out

    @classmethod
    def from_vec(
        cls, model: Model, base: BaseAlgebra, depth, v: np.ndarray
    ) -> "LevelledElement":
        depth = model.normalize_depth(depth)
        atoms = model.atoms(depth)
        n = base.dim
        v = np.asarray(v, dtype=Complex).reshape(len(atoms), n, n)
        coeffs = {atom: v[k] for k, atom in enumerate(atoms)}
        return cls(model, base, depth, coeffs)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"LevelledElement(depth={self.depth}, atoms={len(self.coeffs)}, "
            f"norm={self.norm():.4g})"
        )


def vec_dim(model: Model, base: BaseAlgebra, depth) -> int:
    return len(model.atoms(model.normalize_depth(depth))) * base.dim ** 2


# ---------------------------------------------------------------------------
# JSON codec for elements
# ---------------------------------------------------------------------------


def _atom_to_json(atom: Atom):
    if atom == ():
        return []
    if isinstance(atom[0], str):        # tree atom ("d"|"c", word)
        return [atom[0], list(atom[1])]
    return list(atom)                   # abelian coordinate tuple


def _atom_from_json(model: Model, doc) -> Atom:
    if isinstance(model, PointModel):
        return ()
    if isinstance(model, AbelianToeplitzModel):
        return tuple(int(x) for x in doc)
    tag, word = doc
    return (str(tag), tuple(int(x) for x in word))


def element_to_json(x: LevelledElement) -> dict:
    """Nested-array form: depth tag plus one matrix per carried atom."""
    from .serialize import encode_matrix

    depth = list(x.depth) if isinstance(x.depth, tuple) else x.depth
    return {
        "depth": depth,
        "atoms": [
            {"atom": _atom_to_json(atom), "value": encode_matrix(v)}
            for atom, v in sorted(x.coeffs.items(), key=lambda kv: str(kv[0]))
        ],
    }


def element_from_json(model: Model, base: BaseAlgebra, doc: dict) -> LevelledElement:
    from .serialize import decode_matrix

    depth = model.normalize_depth(
        tuple(doc["depth"]) if isinstance(doc["depth"], list) else doc["depth"]
    )
    coeffs = {}
    for entry in doc.get("atoms", []):
        atom = _atom_from_json(model, entry["atom"])
        coeffs[atom] = decode_matrix(entry["value"], "/atoms")
    return LevelledElement(model, base, depth, coeffs)
