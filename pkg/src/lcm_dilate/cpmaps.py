"""Linear maps into operators on a finite Hilbert space.

Provides the two map representations used throughout (on a base algebra and
on a levelled algebra at fixed depth), the blockwise Choi test for complete
positivity, contraction families indexed by semigroup generators, the
inclusion-exclusion defect operators attached to finite subsets of the
semigroup, the partition-of-unity projections built from range projections,
and the extension machinery that turns a contraction family into a map on a
diagonal (or diagonal-tensor) algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .algebras import BaseAlgebra, Complex, LevelledElement, PointModel, operator_norm
from .errors import CovarianceError, ResourceCapError, SpecMismatchError
from .semigroup import Element, FreeAbelian, Semigroup
from .systems import LcmSystem

PSD_RTOL = 1e-8
CONTRACTION_SLACK = 1e-12
MAX_SUBSET_SIZE = 16


# ---------------------------------------------------------------------------
# operator maps
# ---------------------------------------------------------------------------


class BaseOperatorMap:
    """A linear map from a base algebra to h x h matrices, given by its
    values on the matrix-unit basis."""

    def __init__(self, base: BaseAlgebra, values: Sequence[np.ndarray]):
        self.base = base
        self.values = [np.asarray(v, dtype=Complex) for v in values]
        if len(self.values) != base.linear_dim:
            raise SpecMismatchError(
                f"need {base.linear_dim} basis values, got {len(self.values)}"
            )
        self.h = self.values[0].shape[0]
        for v in self.values:
            if v.shape != (self.h, self.h):
                raise SpecMismatchError("operator values must share one shape")
        self._tensor = np.stack(self.values)  # (linear_dim, h, h)

    def value(self, a) -> np.ndarray:
        if isinstance(a, LevelledElement):
            if not isinstance(a.model, PointModel):
                raise SpecMismatchError("this map is defined on the base algebra")
            a = a.coefficient(())
        coeff = self.base.coefficients(np.asarray(a, dtype=Complex))
        return np.tensordot(coeff, self._tensor, axes=(0, 0))

    def unital_defect(self) -> float:
        return operator_norm(self.value(self.base.unit()) - np.eye(self.h))

    def selfadjoint_defect(self) -> float:
        worst = 0.0
        for u in self.base.basis():
            worst = max(
                worst, operator_norm(self.value(u.conj().T) - self.value(u).conj().T)
            )
        return worst

    def choi_blocks(self) -> list[tuple[str, np.ndarray]]:
        """One Choi matrix per direct summand of the domain."""
        out = []
        offset = 0
        for bi, n in enumerate(self.base.blocks):
            c = np.zeros((n * self.h, n * self.h), dtype=Complex)
            for i in range(n):
                for j in range(n):
                    val = self.values[offset + i * n + j]
                    c[
                        i * self.h: (i + 1) * self.h, j * self.h: (j + 1) * self.h
                    ] = val
            out.append((f"block{bi}", c))
            offset += n * n
        return out


class LevelledOperatorMap:
    """A linear map from a levelled algebra at fixed depth to h x h matrices.

    ``values[atom]`` is an array of shape (base linear dim, h, h): one value
    per atom (x) matrix-unit basis element.  Evaluation refines the argument
    up to the map's depth, so the map represents a function on the whole
    inductive stage tower below it (and on anything above when the values
    are stage-consistent, which the builders below guarantee).
    """

    def __init__(self, sys: LcmSystem, depth, values: dict):
        self.sys = sys
        self.model = sys.model
        self.base = sys.base
        self.depth = self.model.normalize_depth(depth)
        self.values = {}
        atoms = self.model.atoms(self.depth)
        for atom in atoms:
            v = np.asarray(values[atom], dtype=Complex)
            if v.ndim == 2:
                v = v[np.newaxis]
            self.values[atom] = v
        self.h = self.values[atoms[0]].shape[-1]
        nunits = self.base.linear_dim
        for atom, v in self.values.items():
            if v.shape != (nunits, self.h, self.h):
                raise SpecMismatchError(f"bad value shape at atom {atom}")
        self._atom_pos = {atom: k for k, atom in enumerate(atoms)}
        self._tensor = np.stack([self.values[a] for a in atoms])

    def value(self, x: LevelledElement) -> np.ndarray:
        if not self.model.depth_leq(x.depth, self.depth):
            raise SpecMismatchError(
                f"element at depth {x.depth} exceeds map depth {self.depth}"
            )
        y = x.refine_to(self.depth)
        coeff = np.zeros(self._tensor.shape[:2], dtype=Complex)
        for atom, mat in y.coeffs.items():
            coeff[self._atom_pos[atom]] = self.base.coefficients(mat)
        return np.tensordot(coeff, self._tensor, axes=([0, 1], [0, 1]))

    def unital_defect(self) -> float:
        one = LevelledElement.unit(self.model, self.base, self.depth)
        return operator_norm(self.value(one) - np.eye(self.h))

    def selfadjoint_defect(self) -> float:
        worst = 0.0
        for atom in self.model.atoms(self.depth):
            for u in self.base.basis():
                x = LevelledElement.from_atom(self.model, self.base, self.depth, atom, u)
                worst = max(
                    worst,
                    operator_norm(self.value(x.star()) - self.value(x).conj().T),
                )
        return worst

    def choi_blocks(self) -> list[tuple[str, np.ndarray]]:
        """One Choi matrix per atom per base-algebra summand: at fixed depth
        the domain is the direct sum of one base-algebra copy per atom."""
        out = []
        for atom in self.model.atoms(self.depth):
            vals = self.values[atom]
            offset = 0
            for bi, n in enumerate(self.base.blocks):
                c = np.zeros((n * self.h, n * self.h), dtype=Complex)
                for i in range(n):
                    for j in range(n):
                        c[
                            i * self.h: (i + 1) * self.h,
                            j * self.h: (j + 1) * self.h,
                        ] = vals[offset + i * n + j]
                out.append((f"{atom}|block{bi}", c))
                offset += n * n
        return out


OperatorMap = Union[BaseOperatorMap, LevelledOperatorMap]


# -- convenience constructors -------------------------------------------------


def identity_map(base: BaseAlgebra) -> BaseOperatorMap:
    """The identity representation of the base algebra on its own space."""
    return BaseOperatorMap(base, base.basis())

def transpose_map(base: BaseAlgebra) -> BaseOperatorMap:
    """The transpose map; positive but not completely positive on blocks
    of size >= 2.  Used as a negative-control fixture."""
    return BaseOperatorMap(base, [u.T for u in base.basis()])


def state_map(base: BaseAlgebra, rho: np.ndarray, h: int) -> BaseOperatorMap:
    """a -> Tr(rho a) I_h for a density matrix rho; unital completely
    positive and nowhere multiplicative."""
    rho = np.asarray(rho, dtype=Complex)
    eye = np.eye(h, dtype=Complex)
    return BaseOperatorMap(
        base, [np.trace(rho @ u) * eye for u in base.basis()]
    )


def diagonal_compression_map(base: BaseAlgebra) -> BaseOperatorMap:
    """a -> diag(a); unital completely positive, not multiplicative."""
    return BaseOperatorMap(base, [np.diag(np.diag(u)) for u in base.basis()])


@dataclass
class CPReport:
    is_cp: bool
    min_eigenvalue: float
    scale: float
    witness: Optional[np.ndarray]
    where: str

    def as_dict(self) -> dict:
        return {
            "is_cp": bool(self.is_cp),
            "min_eigenvalue": float(self.min_eigenvalue),
            "scale": float(self.scale),
            "where": self.where,
        }


def is_completely_positive(phi: OperatorMap, rtol: float = PSD_RTOL) -> CPReport:
    """Blockwise Choi-matrix test.

    The verdict is relative: the smallest eigenvalue must stay above
    -rtol * scale with scale the largest eigenvalue magnitude seen (floored
    at one), since the Gram machinery downstream produces exactly singular
    positive matrices.
    """
    min_eig = np.inf
    scale = 1.0
    witness = None
    where = ""
    for label, choi in phi.choi_blocks():
        w, v = np.linalg.eigh((choi + choi.conj().T) / 2.0)
        scale = max(scale, float(np.abs(w).max()) if w.size else 0.0)
        if w.size and w[0] < min_eig:
            min_eig = float(w[0])
            witness = v[:, 0]
            where = label
    if not np.isfinite(min_eig):
        min_eig = 0.0
    return CPReport(min_eig >= -rtol * scale, min_eig, scale, witness, where)


# ---------------------------------------------------------------------------
# contraction families
# ---------------------------------------------------------------------------


class ContractionFamily:
    """Generator contractions T_i together with word evaluation T(p).

    For the free abelian monoid the generators must commute for T to be a
    homomorphism; this is checked at construction.
    """

    def __init__(self, semigroup: Semigroup, mats: Sequence[np.ndarray],
                 tol: float = 1e-10):
        self.semigroup = semigroup
        self.mats = [np.asarray(m, dtype=Complex) for m in mats]
        if len(self.mats) != semigroup.rank:
            raise SpecMismatchError("need one contraction per generator")
        self.h = self.mats[0].shape[0]
        for m in self.mats:
            if m.shape != (self.h, self.h):
                raise SpecMismatchError("generator contractions must share one shape")
            if operator_norm(m) > 1.0 + CONTRACTION_SLACK:
                raise SpecMismatchError(
                    f"generator norm {operator_norm(m):.12f} exceeds 1"
                )
        if isinstance(semigroup, FreeAbelian):
            for i in range(len(self.mats)):
                for j in range(i + 1, len(self.mats)):
                    comm = self.mats[i] @ self.mats[j] - self.mats[j] @ self.mats[i]
                    if operator_norm(comm) > tol:
                        raise SpecMismatchError(
                            "abelian contraction families must commute; "
                            f"[T{i+1}, T{j+1}] has norm {operator_norm(comm):.3e}"
                        )

    def __call__(self, p: Element) -> np.ndarray:
        self.semigroup.validate_element(tuple(p))
        out = np.eye(self.h, dtype=Complex)
        for letter in self.semigroup.as_word(tuple(p)):
            out = out @ self.mats[letter - 1]
        return out


# ---------------------------------------------------------------------------
# inclusion-exclusion defects and partitions of unity
# ---------------------------------------------------------------------------


def _sorted_elements(sg: Semigroup, elements) -> list[Element]:
    es = [tuple(e) for e in elements]
    for e in es:
        sg.validate_element(e)
    return sorted(set(es), key=lambda e: (sg.length(e), e))


def nica_defect(T: ContractionFamily, F, cap: int = MAX_SUBSET_SIZE) -> np.ndarray:
    """sum over U of (-1)^|U| T(vU) T(vU)* with vU the least common multiple
    of U; subsets without a common multiple contribute nothing.

    Hermitian by construction.  Nonnegativity of these operators over all
    finite F is the dilation obstruction tested by `check-nica`.
    """
    sg = T.semigroup
    fs = _sorted_elements(sg, F)
    if len(fs) > cap:
        raise ResourceCapError(
            f"defect over {len(fs)} elements needs 2^{len(fs)} terms (cap {cap})"
        )
    out = np.zeros((T.h, T.h), dtype=Complex)
    for k in range(len(fs) + 1):
        sign = (-1) ** k
        for combo in itertools.combinations(fs, k):
            s = sg.lcm_of(combo)
            if s is None:
                continue
            ts = T(s)
            out = out + sign * (ts @ ts.conj().T)
    return out


def ewf_projection(sys: LcmSystem, W, F) -> LevelledElement:
    """Product of range projections over W and their complements over F - W.

    The family over all subsets of F is a partition of unity into pairwise
    orthogonal projections.
    """
    sg = sys.semigroup
    ws = _sorted_elements(sg, W)
    fs = _sorted_elements(sg, F)
    if not set(ws) <= set(fs):
        raise SpecMismatchError("W must be a subset of F")
    out = sys.unit()
    for p in ws:
        out = out * sys.unit_projection(p)
    for p in fs:
        if p not in ws:
            out = out * (sys.unit(sys.depth_of(p)) - sys.unit_projection(p))
    return out


# ---------------------------------------------------------------------------
# maps induced by a contraction family
# ---------------------------------------------------------------------------


def _beta_unitary(sys: LcmSystem, p: Element) -> np.ndarray:
    """The base automorphism unitary along any factorization of p."""
    u = sys.base.unit()
    for letter in sys.semigroup.as_word(tuple(p)):
        u = u @ sys.betas[letter - 1]
    return u


def _abelian_atom_value(sys, T, phi_of, atom, depth):
    """Inclusion-exclusion value at one abelian atom: point coordinates are
    differences of consecutive range projections, tail coordinates are the
    range projections themselves."""
    points = [i for i in range(len(atom)) if atom[i] < depth[i]]
    h = T.h
    out = np.zeros((h, h), dtype=Complex)
    for k in range(len(points) + 1):
        for combo in itertools.combinations(points, k):
            v = list(atom)
            for i in combo:
                v[i] += 1
            tv = T(tuple(v))
            out = out + (-1) ** k * (tv @ phi_of(tuple(v)) @ tv.conj().T)
    return out


def build_phi_tilde(
    sys: LcmSystem,
    phi: BaseOperatorMap,
    T: ContractionFamily,
    depth,
    consistency_rtol: float = 1e-9,
):
    """Lift a base-algebra map to the levelled algebra along T.

    On a cylinder (or range projection) at p tensored with a, the lifted map
    is T(p) phi(beta_p^{-1}(a)) T(p)*; atom values follow by inclusion-
    exclusion.  For the boundary model this is stage-consistent only when
    phi(a) = sum_i T_i phi(beta_i^{-1}(a)) T_i*, which is verified here.

    For point-model systems the base map is already the whole story.
    """
    if isinstance(sys.model, PointModel):
        return phi
    if phi.base != sys.base:
        raise SpecMismatchError("base map domain does not match the system")
    if T.semigroup.kind != sys.semigroup.kind or T.semigroup.rank != sys.semigroup.rank:
        raise SpecMismatchError("contraction family indexed by the wrong semigroup")
    d = sys.model.normalize_depth(depth)
    kind = sys.model.kind
    units = sys.base.basis()
    h = T.h

    def lifted(p: Element, u: np.ndarray) -> np.ndarray:
        tp = T(p)
        bu = _beta_unitary(sys, p)
        return tp @ phi.value(bu.conj().T @ u @ bu) @ tp.conj().T

    if kind == "boundary_free":
        for ui, u in enumerate(units):
            total = sum(
                lifted(g, u) for g in sys.semigroup.generators
            )
            resid = operator_norm(phi.value(u) - total)
            if resid > consistency_rtol * max(1.0, operator_norm(phi.value(u))):
                raise CovarianceError(
                    resid, consistency_rtol,
                    f"stage consistency of the boundary lift at basis #{ui}",
                )

    values = {}
    if kind == "toeplitz_abelian":
        for atom in sys.model.atoms(d):
            vals = np.zeros((len(units), h, h), dtype=Complex)
            for ui, u in enumerate(units):
                def phi_of(v, _u=u):
                    bu = _beta_unitary(sys, v)
                    return phi.value(bu.conj().T @ _u @ bu)
                vals[ui] = _abelian_atom_value(sys, T, phi_of, atom, d)
            values[atom] = vals
    elif kind in ("toeplitz_free", "boundary_free"):
        for atom in sys.model.atoms(d):
            tag, w = atom
            vals = np.zeros((len(units), h, h), dtype=Complex)
            for ui, u in enumerate(units):
                v = lifted(w, u)
                if tag == "d":
                    for g in sys.semigroup.generators:
                        v = v - lifted(sys.semigroup.multiply(w, g), u)
                vals[ui] = v
            values[atom] = vals
    else:  # pragma: no cover - guarded above
        raise SpecMismatchError(f"no lift for model kind {kind!r}")
    return LevelledOperatorMap(sys, d, values)


@dataclass
class PhiTExtension:
    accepted: bool
    map: Optional[LevelledOperatorMap]   # the linear extension, even if rejected
    min_eigenvalue: float
    scale: float
    violations: list  # (atom, min eigenvalue)

    def as_dict(self) -> dict:
        return {
            "accepted": bool(self.accepted),
            "min_eigenvalue": float(self.min_eigenvalue),
            "scale": float(self.scale),
            "violations": [
                {"atom": str(a), "min_eigenvalue": float(m)} for a, m in self.violations
            ],
        }


def extend_phi_T(
    sys: LcmSystem, T: ContractionFamily, depth, rtol: float = PSD_RTOL
) -> PhiTExtension:
    """Extend p -> T(p)T(p)* to the truncated diagonal algebra.

    Requires a diagonal model (base C).  Atom values are computed by
    inclusion-exclusion; the extension is positive on the truncation exactly
    when every atom value is positive semidefinite, which is the acceptance
    test here.  Rejections carry the violating atoms.
    """
    if isinstance(sys.model, PointModel) or sys.base.dim != 1:
        raise SpecMismatchError(
            "the contraction extension needs a diagonal model over scalars"
        )
    phi0 = BaseOperatorMap(sys.base, [np.eye(T.h, dtype=Complex)])
    lifted = build_phi_tilde(sys, phi0, T, depth)
    violations = []
    min_eig = np.inf
    scale = 1.0
    for atom, vals in lifted.values.items():
        m = (vals[0] + vals[0].conj().T) / 2.0
        w = np.linalg.eigvalsh(m)
        scale = max(scale, float(np.abs(w).max()))
        if w[0] < min_eig:
            min_eig = float(w[0])
        if w[0] < -rtol * max(1.0, float(np.abs(w).max())):
            violations.append((atom, float(w[0])))
    return PhiTExtension(
        not violations, lifted, float(min_eig), scale, violations
    )


def phi_F(
    phi: BaseOperatorMap,
    betas: Sequence[np.ndarray],
    T: ContractionFamily,
    F,
    cap: int = MAX_SUBSET_SIZE,
) -> BaseOperatorMap:
    """The inclusion-exclusion compression of phi along F.

    phi_F(a) = sum over U of (-1)^|U| T(sU) phi(beta_{sU}^{-1}(a)) T(sU)*,
    with sU the least common multiple of U and unbounded subsets dropped.
    Complete positivity of every phi_F is the lifting criterion for the
    tensor construction.
    """
    sg = T.semigroup
    fs = _sorted_elements(sg, F)
    if len(fs) > cap:
        raise ResourceCapError(f"phi_F over {len(fs)} elements (cap {cap})")
    betas = [np.asarray(b, dtype=Complex) for b in betas]

    def beta_u(p: Element) -> np.ndarray:
        u = np.eye(phi.base.dim, dtype=Complex)
        for letter in sg.as_word(p):
            u = u @ betas[letter - 1]
        return u

    values = []
    for unit in phi.base.basis():
        acc = np.zeros((T.h, T.h), dtype=Complex)
        for k in range(len(fs) + 1):
            sign = (-1) ** k
            for combo in itertools.combinations(fs, k):
                s = sg.lcm_of(combo)
                if s is None:
                    continue
                ts = T(s)
                bu = beta_u(s)
                acc = acc + sign * (
                    ts @ phi.value(bu.conj().T @ unit @ bu) @ ts.conj().T
                )
        values.append(acc)
    return BaseOperatorMap(phi.base, values)
