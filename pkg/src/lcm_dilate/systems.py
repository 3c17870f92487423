"""Semigroup actions by injective *-endomorphisms and their validation.

A system couples a semigroup with an algebra model and one endomorphism per
generator.  For the levelled models the generator action is structural: shift
the atom catalog one step and conjugate the base-algebra values by a unitary.
For the point model the generators act by explicit maps on a fixed
finite-dimensional algebra (unitary conjugations or general linear maps on
vectorized elements).

``validate`` checks the properties that make the range-projection calculus
work: every generator image is an ideal, generator range projections multiply
according to the lcm rule, and each generator map is an injective
*-endomorphism.  For the free monoid the generator-level checks suffice; for
the free abelian monoid pairs are checked up to the requested depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebras import (
    BaseAlgebra,
    Complex,
    LevelledElement,
    Model,
    PointModel,
    model_from_kind,
    operator_norm,
)
from .errors import SpecMismatchError
from .semigroup import Element, FreeAbelian, FreeMonoid, Semigroup

IDEAL_RTOL = 1e-9     # residual after projection onto the image subspace
RANK_CUT = 1e-10      # relative singular-value cut for rank decisions
CHECK_TOL = 1e-8


# ---------------------------------------------------------------------------
# generator maps for the point model
# ---------------------------------------------------------------------------


class GeneratorMap:
    """One generator's action on a fixed base algebra."""

    def __init__(self, unitary=None, linear=None):
        if (unitary is None) == (linear is None):
            raise SpecMismatchError("give exactly one of unitary / linear")
        self.unitary = None if unitary is None else np.asarray(unitary, dtype=Complex)
        self.linear = None if linear is None else np.asarray(linear, dtype=Complex)
        self._linear_inv = None

    def apply(self, a: np.ndarray) -> np.ndarray:
        if self.unitary is not None:
            return self.unitary @ a @ self.unitary.conj().T
        d = int(round(np.sqrt(self.linear.shape[1])))
        return (self.linear @ np.asarray(a).reshape(-1)).reshape(d, d)

    def apply_inverse(self, a: np.ndarray) -> np.ndarray:
        if self.unitary is not None:
            return self.unitary.conj().T @ a @ self.unitary
        if self._linear_inv is None:
            self._linear_inv = np.linalg.inv(self.linear)
        d = int(round(np.sqrt(self.linear.shape[1])))
        return (self._linear_inv @ np.asarray(a).reshape(-1)).reshape(d, d)


# ---------------------------------------------------------------------------
# validation report plumbing
# ---------------------------------------------------------------------------


@dataclass
class CheckRecord:
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": None if self.value is None else float(self.value),
            "threshold": None if self.threshold is None else float(self.threshold),
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, threshold=None, detail=""):
        self.checks.append(CheckRecord(name, bool(passed), value, threshold, detail))

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]


class SystemValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        names = ", ".join(c.name for c in report.failures())
        super().__init__(f"system validation failed: {names}")


# ---------------------------------------------------------------------------
# corner bases
# ---------------------------------------------------------------------------


@dataclass
class CornerBasis:
    """Orthonormal spanning set of a compressed subspace E_p . A . E_q.

    ``vectors`` holds the orthonormal rows in the fixed vectorization at
    ``depth``; ``elements`` are the same vectors as algebra elements.
    """

    depth: object
    vectors: np.ndarray          # (n, vec_dim), orthonormal rows
    elements: list[LevelledElement]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def coefficients(self, x: LevelledElement, rtol: float = 1e-8):
        """Coordinates of x in this basis plus the projection residual."""
        v = x.vec(self.depth)
        c = self.vectors.conj() @ v
        resid = float(np.linalg.norm(v - self.vectors.T @ c))
        scale = max(1.0, float(np.linalg.norm(v)))
        return c, resid / scale


# ---------------------------------------------------------------------------
# the system object
# ---------------------------------------------------------------------------


_COMPATIBLE = {
    "toeplitz_abelian": FreeAbelian,
    "toeplitz_free": FreeMonoid,
    "boundary_free": FreeMonoid,
}


class LcmSystem:
    """A semigroup acting on a levelled or fixed finite-dimensional algebra.

    betas: one unitary per generator (levelled models; identity when omitted).
    alphas: one GeneratorMap per generator (point model only).
    """

    def __init__(
        self,
        semigroup: Semigroup,
        model: Model,
        base: BaseAlgebra,
        betas: Optional[Sequence[np.ndarray]] = None,
        alphas: Optional[Sequence[GeneratorMap]] = None,
    ):
        self.semigroup = semigroup
        self.model = model
        self.base = base
        if not isinstance(model, PointModel):
            expected = _COMPATIBLE[model.kind]
            if not isinstance(semigroup, expected) or model.rank != semigroup.rank:
                raise SpecMismatchError(
                    f"model {model.kind}(rank={model.rank}) does not match "
                    f"semigroup {semigroup.kind}(rank={semigroup.rank})"
                )
            if alphas is not None:
                raise SpecMismatchError("explicit maps only apply to the point model")
            if betas is None:
                betas = [base.unit() for _ in range(semigroup.rank)]
            self.betas = [np.asarray(b, dtype=Complex) for b in betas]
            if len(self.betas) != semigroup.rank:
                raise SpecMismatchError("need one base automorphism per generator")
            for b in self.betas:
                if b.shape != (base.dim, base.dim):
                    raise SpecMismatchError("base automorphism has wrong shape")
                if operator_norm(b @ b.conj().T - base.unit()) > 1e-10:
                    raise SpecMismatchError("base automorphisms must be unitary")
            self.alphas = None
        else:
            if alphas is None:
                raise SpecMismatchError("point-model systems need explicit maps")
            if len(alphas) != semigroup.rank:
                raise SpecMismatchError("need one generator map per generator")
            self.alphas = list(alphas)
            self.betas = None
        self._corner_cache: dict = {}

    # -- elements -------------------------------------------------------------

    @property
    def is_levelled(self) -> bool:
        return not isinstance(self.model, PointModel)

    def unit(self, depth=None) -> LevelledElement:
        return LevelledElement.unit(self.model, self.base, depth)

    def zero(self, depth=None) -> LevelledElement:
        return LevelledElement.zero(self.model, self.base, depth)

    def from_matrix(self, mat) -> LevelledElement:
        return LevelledElement.from_matrix(self.model, self.base, mat)

    def algebra_basis(self, depth=None) -> list[LevelledElement]:
        d = self.model.normalize_depth(
            self.model.zero_depth() if depth is None else depth
        )
        out = []
        for atom in self.model.atoms(d):
            for u in self.base.basis():
                out.append(LevelledElement.from_atom(self.model, self.base, d, atom, u))
        return out

    def basis_labels(self, depth=None) -> list[str]:
        d = self.model.normalize_depth(
            self.model.zero_depth() if depth is None else depth
        )
        out = []
        for atom in self.model.atoms(d):
            for lbl in self.base.basis_labels():
                out.append(f"{atom}|{lbl}" if atom != () else lbl)
        return out

    # -- the action -------------------------------------------------------------

    def apply_generator(self, letter: int, x: LevelledElement) -> LevelledElement:
        if not 1 <= letter <= self.semigroup.rank:
            raise SpecMismatchError(f"no generator {letter}")
        if self.alphas is not None:
            coeffs = {a: self.alphas[letter - 1].apply(v) for a, v in x.coeffs.items()}
            return LevelledElement(x.model, x.base, x.depth, coeffs)
        shifted, depth = self.model.shift_atoms(x.coeffs, x.depth, letter)
        u = self.betas[letter - 1]
        coeffs = {a: u @ v @ u.conj().T for a, v in shifted.items()}
        return LevelledElement(x.model, x.base, depth, coeffs)

    def apply_generator_inverse(self, letter: int, x: LevelledElement) -> LevelledElement:
        """Left inverse of one generator: mask by its range projection, then
        shift back.  Defined on the whole algebra."""
        if self.alphas is not None:
            coeffs = {
                a: self.alphas[letter - 1].apply_inverse(v)
                for a, v in x.coeffs.items()
            }
            return LevelledElement(x.model, x.base, x.depth, coeffs)
        masked, depth = self.model.unshift_atoms(x.coeffs, x.depth, letter)
        u = self.betas[letter - 1]
        coeffs = {a: u.conj().T @ v @ u for a, v in masked.items()}
        return LevelledElement(x.model, x.base, depth, coeffs)

    def apply_endo(self, p: Element, x: LevelledElement) -> LevelledElement:
        """The endomorphism at p, composed from generator steps."""
        self.semigroup.validate_element(p)
        out = x
        for letter in reversed(self.semigroup.as_word(p)):
            out = self.apply_generator(letter, out)
        return out

    def alpha_inverse(self, p: Element, x: LevelledElement) -> LevelledElement:
        """Left inverse of the endomorphism at p (mask by the range
        projection of p, then invert); composes generator inverses."""
        self.semigroup.validate_element(p)
        out = x
        for letter in self.semigroup.as_word(p):
            out = self.apply_generator_inverse(letter, out)
        return out

    def unit_projection(self, p: Element) -> LevelledElement:
        return self.apply_endo(p, self.unit())

    def depth_of(self, p: Element):
        """Depth occupied by the range projection of p."""
        return self.unit_projection(p).depth

    # -- corners -----------------------------------------------------------------

    def corner_basis(
        self, p: Element, q: Element, depth, cut: float = RANK_CUT
    ) -> CornerBasis:
        """Orthonormal spanning set of E_p . A(depth) . E_q.

        Empty when pP and qP do not intersect.  The basis is obtained by
        compressing the depth catalog and cutting small singular values.
        """
        key = (tuple(p), tuple(q), self.model.normalize_depth(depth), cut)
        hit = self._corner_cache.get(key)
        if hit is not None:
            return hit
        d = self.model.normalize_depth(depth)
        ep = self.unit_projection(p)
        eq = self.unit_projection(q)
        if not (
            self.model.depth_leq(ep.depth, d) and self.model.depth_leq(eq.depth, d)
        ):
            raise SpecMismatchError(
                f"corner depth {d} cannot host projections at {ep.depth}, {eq.depth}"
            )
        rows = []
        for b in self.algebra_basis(d):
            rows.append((ep * b * eq).vec(d))
        mat = np.array(rows)
        if np.abs(mat).max() == 0.0:
            basis = CornerBasis(d, np.zeros((0, mat.shape[1]), dtype=Complex), [])
            self._corner_cache[key] = basis
            return basis
        _, s, vh = np.linalg.svd(mat, full_matrices=False)
        rank = int(np.sum(s > cut * s[0]))
        vectors = vh[:rank]
        elements = [
            LevelledElement.from_vec(self.model, self.base, d, v) for v in vectors
        ]
        basis = CornerBasis(d, vectors, elements)
        self._corner_cache[key] = basis
        return basis

    # -- validation ---------------------------------------------------------------

    def validate(self, depth: int = 1, tol: float = CHECK_TOL) -> ValidationReport:
        report = ValidationReport()
        if self.alphas is not None:
            self._validate_point(report, depth, tol)
        else:
            self._validate_levelled(report, depth, tol)
        return report

    def _image_span(self, letter: int, basis, out_depth):
        rows = np.array(
            [self.apply_generator(letter, b).vec(out_depth) for b in basis]
        )
        u, s, vh = np.linalg.svd(rows, full_matrices=False)
        rank = int(np.sum(s > RANK_CUT * s[0])) if s.size and s[0] > 0 else 0
        return vh[:rank], rank

    def _validate_common(self, report, basis, tol, out_depth_of):
        gens = self.semigroup.generators
        for g, p in enumerate(gens, start=1):
            # *-endomorphism on a basis sample
            worst_mult = worst_star = 0.0
            for x in basis:
                ax = self.apply_generator(g, x)
                worst_star = max(
                    worst_star, (self.apply_generator(g, x.star()) - ax.star()).norm()
                )
                for y in basis:
                    lhs = self.apply_generator(g, x * y)
                    rhs = ax * self.apply_generator(g, y)
                    worst_mult = max(worst_mult, (lhs - rhs).norm())
            report.add(f"endomorphism[g{g}].multiplicative", worst_mult <= tol,
                       worst_mult, tol)
            report.add(f"endomorphism[g{g}].star", worst_star <= tol, worst_star, tol)

            # injectivity via numerical rank of the image
            span, rank = self._image_span(g, basis, out_depth_of(g))
            report.add(
                f"endomorphism[g{g}].injective", rank == len(basis),
                float(rank), float(len(basis)),
                detail=f"rank {rank} of {len(basis)}",
            )

            # ideal: a * alpha_g(b) stays in the image span
            worst = 0.0
            witness = ""
            out_basis = self.algebra_basis(out_depth_of(g))
            for bi, b in enumerate(basis):
                ab = self.apply_generator(g, b)
                for ai, a in enumerate(out_basis):
                    for prod in (a * ab, ab * a):
                        v = prod.vec(out_depth_of(g))
                        nv = np.linalg.norm(v)
                        if nv == 0:
                            continue
                        resid = np.linalg.norm(v - span.T @ (span.conj() @ v)) / max(
                            1.0, nv
                        )
                        if resid > worst:
                            worst, witness = float(resid), f"a#{ai} alpha(b#{bi})"
                    if worst > IDEAL_RTOL:
                        break
            report.add(
                f"ideal[g{g}]", worst <= IDEAL_RTOL, worst, IDEAL_RTOL,
                detail="" if worst <= IDEAL_RTOL else f"image not an ideal: {witness}",
            )

    def _validate_levelled(self, report, depth, tol):
        for i, u in enumerate(self.betas, start=1):
            err = operator_norm(u @ u.conj().T - self.base.unit())
            report.add(f"beta[{i}].unitary", err <= tol, err, tol)

        d0 = self.model.normalize_depth(depth)
        basis = self.algebra_basis(d0)

        def out_depth(g):
            return self.apply_generator(g, self.unit(d0)).depth

        self._validate_common(report, basis, tol, out_depth)
        self._validate_units(report, depth, tol)
        self._validate_factorizations(report, tol)

    def _validate_point(self, report, depth, tol):
        basis = self.algebra_basis()
        for i, gm in enumerate(self.alphas, start=1):
            if gm.unitary is not None:
                err = operator_norm(
                    gm.unitary @ gm.unitary.conj().T - self.base.unit()
                )
                report.add(f"alpha[{i}].unitary", err <= tol, err, tol)
        # unitality (injective endomorphisms of a fixed-dimension algebra are
        # automorphisms, so the unit must be fixed)
        for g in range(1, self.semigroup.rank + 1):
            err = (self.apply_generator(g, self.unit()) - self.unit()).norm()
            report.add(f"alpha[{g}].unital", err <= tol, err, tol)

        self._validate_common(report, basis, tol, lambda g: 0)
        self._validate_units(report, depth, tol)
        self._validate_factorizations(report, tol)

    def _validate_units(self, report, depth, tol):
        sg = self.semigroup
        if isinstance(sg, FreeMonoid) and sg.rank >= 2:
            worst = 0.0
            for i in range(1, sg.rank + 1):
                for j in range(1, sg.rank + 1):
                    if i == j:
                        continue
                    ei = self.unit_projection((i,))
                    ej = self.unit_projection((j,))
                    worst = max(worst, (ei * ej).norm())
            report.add("units.orthogonal_generators", worst <= tol, worst, tol)
        else:
            worst = 0.0
            witness = ""
            elems = sg.enumerate_up_to(min(depth, 2))
            for p in elems:
                for q in elems:
                    r = sg.lcm(p, q)
                    lhs = self.unit_projection(p) * self.unit_projection(q)
                    if r is None:
                        err = lhs.norm()
                    else:
                        err = (lhs - self.unit_projection(r)).norm()
                    if err > worst:
                        worst, witness = float(err), f"E{p}E{q}"
            report.add("units.lcm_rule", worst <= tol, worst, tol, detail=witness)

    def _validate_factorizations(self, report, tol):
        """Two factorizations of the same element act identically."""
        sg = self.semigroup
        if sg.rank < 2:
            report.add("action.factorization", True, 0.0, tol)
            return
        p = sg.multiply(sg.generators[0], sg.generators[1])
        x = self.algebra_basis()[min(1, len(self.algebra_basis()) - 1)]
        via_word = self.apply_endo(p, x)
        other = self.apply_generator(
            1, self.apply_generator(2, x)
        )  # same word for free monoid, swapped order for abelian
        if isinstance(sg, FreeAbelian):
            other = self.apply_generator(2, self.apply_generator(1, x))
        err = (via_word - other).norm()
        report.add("action.factorization", err <= tol, err, tol)


# ---------------------------------------------------------------------------
# stage maps (validation-only fixtures)
# ---------------------------------------------------------------------------


class StageSystem:
    """One inductive step of a dynamical system: generator maps from a domain
    algebra into a larger codomain algebra, given by their basis images.

    Only validation is supported; this is how non-examples (images that fail
    to be ideals) are represented at finite dimension.
    """

    def __init__(
        self,
        semigroup: Semigroup,
        domain: BaseAlgebra,
        codomain: BaseAlgebra,
        basis_images: Sequence[Sequence[np.ndarray]],
    ):
        self.semigroup = semigroup
        self.domain = domain
        self.codomain = codomain
        if len(basis_images) != semigroup.rank:
            raise SpecMismatchError("need one image list per generator")
        self.basis_images = [
            [np.asarray(m, dtype=Complex) for m in images] for images in basis_images
        ]
        for images in self.basis_images:
            if len(images) != len(domain.basis()):
                raise SpecMismatchError("need one image per domain basis element")

    def apply_generator(self, letter: int, a: np.ndarray) -> np.ndarray:
        coeff = self.domain.coefficients(a)
        images = self.basis_images[letter - 1]
        out = self.codomain.zero()
        for c, img in zip(coeff, images):
            out = out + c * img
        return out

    def validate(self, tol: float = CHECK_TOL) -> ValidationReport:
        report = ValidationReport()
        dom_basis = self.domain.basis()
        cod_basis = self.codomain.basis()
        for g in range(1, self.semigroup.rank + 1):
            worst_mult = worst_star = 0.0
            for x in dom_basis:
                ax = self.apply_generator(g, x)
                worst_star = max(
                    worst_star,
                    operator_norm(self.apply_generator(g, x.conj().T) - ax.conj().T),
                )
                for y in dom_basis:
                    lhs = self.apply_generator(g, x @ y)
                    worst_mult = max(
                        worst_mult,
                        operator_norm(lhs - ax @ self.apply_generator(g, y)),
                    )
            report.add(f"endomorphism[g{g}].multiplicative", worst_mult <= tol,
                       worst_mult, tol)
            report.add(f"endomorphism[g{g}].star", worst_star <= tol, worst_star, tol)

            rows = np.array(
                [self.apply_generator(g, x).reshape(-1) for x in dom_basis]
            )
            _, s, vh = np.linalg.svd(rows, full_matrices=False)
            rank = int(np.sum(s > RANK_CUT * s[0])) if s.size and s[0] > 0 else 0
            report.add(
                f"endomorphism[g{g}].injective", rank == len(dom_basis),
                float(rank), float(len(dom_basis)),
            )
            span = vh[:rank]

            worst = 0.0
            for x in dom_basis:
                ax = self.apply_generator(g, x)
                for a in cod_basis:
                    for prod in (a @ ax, ax @ a):
                        v = prod.reshape(-1)
                        nv = np.linalg.norm(v)
                        if nv == 0:
                            continue
                        resid = np.linalg.norm(
                            v - span.T @ (span.conj() @ v)
                        ) / max(1.0, nv)
                        worst = max(worst, float(resid))
            report.add(
                f"ideal[g{g}]", worst <= IDEAL_RTOL, worst, IDEAL_RTOL,
                detail="" if worst <= IDEAL_RTOL else "image not an ideal",
            )

        if isinstance(self.semigroup, FreeMonoid) and self.semigroup.rank >= 2:
            worst = 0.0
            unit = self.domain.unit()
            for i in range(1, self.semigroup.rank + 1):
                for j in range(1, self.semigroup.rank + 1):
                    if i != j:
                        worst = max(
                            worst,
                            operator_norm(
                                self.apply_generator(i, unit)
                                @ self.apply_generator(j, unit)
                            ),
                        )
            report.add("units.orthogonal_generators", worst <= tol, worst, tol)
        return report


# ---------------------------------------------------------------------------
# construction from a config mapping
# ---------------------------------------------------------------------------


def build_system(config: dict, validate: bool = True, depth: int = 1):
    """Build a system from a plain mapping (see the instance JSON schema).

    Raises SystemValidationError when ``validate`` is set and a structural
    check fails.
    """
    from .semigroup import semigroup_from_json

    sg = semigroup_from_json(config["semigroup"])
    model_cfg = config.get("model", {"kind": "matrix"})
    kind = model_cfg["kind"]
    base = BaseAlgebra(tuple(config.get("base", {}).get("blocks", [1])))

    if kind == "stage":
        domain = base
        codomain = BaseAlgebra(tuple(config["codomain"]["blocks"]))
        return StageSystem(sg, domain, codomain, config["basis_images"])

    model = model_from_kind(kind, sg.rank)
    if kind == "matrix":
        alphas = []
        for entry in config.get("alphas", []):
            if "unitary" in entry:
                alphas.append(GeneratorMap(unitary=entry["unitary"]))
            else:
                alphas.append(GeneratorMap(linear=entry["linear"]))
        if not alphas:
            alphas = [
                GeneratorMap(unitary=base.unit()) for _ in range(sg.rank)
            ]
        sys_ = LcmSystem(sg, model, base, alphas=alphas)
    else:
        betas = config.get("betas")
        sys_ = LcmSystem(sg, model, base, betas=betas)

    if validate:
        report = sys_.validate(depth=depth)
        if not report.passed:
            raise SystemValidationError(report)
    return sys_
