import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_matrix
from lcm_dilate.algebras import (
    AbelianToeplitzModel,
    BaseAlgebra,
    FreeBoundaryModel,
    FreeToeplitzModel,
    LevelledElement,
    PointModel,
    operator_norm,
    vec_dim,
)
from lcm_dilate.errors import SpecMismatchError

C = BaseAlgebra((1,))
M2 = BaseAlgebra((2,))
M2pM1 = BaseAlgebra((2, 1))


def test_base_algebra_basics():
    assert M2pM1.dim == 3
    assert M2pM1.linear_dim == 5
    assert len(M2pM1.basis()) == 5
    assert len(M2pM1.basis_labels()) == 5
    assert np.allclose(sum(u for u in M2.basis() if u.trace() == 1), np.eye(2))


def test_base_algebra_membership():
    good = np.diag([1.0, 2.0, 3.0]).astype(complex)
    assert M2pM1.is_member(good)
    bad = np.ones((3, 3), dtype=complex)
    assert not M2pM1.is_member(bad)
    assert not M2pM1.is_member(np.eye(2))


def test_cstar_identity():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = random_matrix(rng, 3)
        a[2, :2] = a[:2, 2] = 0  # block structure of M2 (+) M1
        assert abs(operator_norm(a.conj().T @ a) - operator_norm(a) ** 2) < 1e-10


def test_coefficients_reconstruct():
    rng = np.random.default_rng(6)
    a = np.zeros((3, 3), dtype=complex)
    a[:2, :2] = random_matrix(rng, 2)
    a[2, 2] = 1.7 + 0.3j
    coeffs = M2pM1.coefficients(a)
    rebuilt = sum(c * u for c, u in zip(coeffs, M2pM1.basis()))
    assert np.allclose(rebuilt, a)


@pytest.mark.parametrize(
    "model,depth,count",
    [
        (AbelianToeplitzModel(1), (3,), 4),
        (AbelianToeplitzModel(2), (2, 2), 9),
        (AbelianToeplitzModel(2), (1, 3), 8),
        (FreeToeplitzModel(2), 2, 3 + 4),
        (FreeToeplitzModel(3), 2, 4 + 9),
        (FreeBoundaryModel(2), 3, 8),
        (PointModel(1), 0, 1),
    ],
)
def test_atom_counts(model, depth, count):
    assert len(model.atoms(depth)) == count


@pytest.mark.parametrize(
    "model",
    [AbelianToeplitzModel(2), FreeToeplitzModel(2), FreeBoundaryModel(2)],
)
def test_refinement_is_unital_star_homomorphism(model):
    rng = np.random.default_rng(7)
    d0 = model.normalize_depth(1)
    d1 = model.normalize_depth(2)
    one = LevelledElement.unit(model, M2, d0)
    assert one.refine_to(d1).allclose(LevelledElement.unit(model, M2, d1))
    xs = []
    for _ in range(2):
        coeffs = {atom: random_matrix(rng, 2) for atom in model.atoms(d0)}
        xs.append(LevelledElement(model, M2, d0, coeffs))
    x, y = xs
    assert (x * y).refine_to(d1).allclose(x.refine_to(d1) * y.refine_to(d1))
    assert (x + y).refine_to(d1).allclose(x.refine_to(d1) + y.refine_to(d1))
    assert x.star().refine_to(d1).allclose(x.refine_to(d1).star())
    # injectivity: refined catalog vectors of the depth-d0 basis stay
    # linearly independent
    rows = []
    for atom in model.atoms(d0):
        for u in M2.basis():
            rows.append(
                LevelledElement.from_atom(model, M2, d0, atom, u).vec(d1)
            )
    rank = np.linalg.matrix_rank(np.array(rows))
    assert rank == len(rows)


def test_refinement_preserves_norm():
    model = FreeToeplitzModel(2)
    x = LevelledElement.from_atom(model, C, 1, ("c", (2,)), np.array([[2.0]]))
    assert x.norm() == x.refine_to(3).norm() == 2.0


def test_atoms_are_orthogonal_idempotents():
    for model in (AbelianToeplitzModel(1), FreeToeplitzModel(2), FreeBoundaryModel(2)):
        d = model.normalize_depth(2)
        atoms = model.atoms(d)
        for i, a in enumerate(atoms):
            ea = LevelledElement.from_atom(model, C, d, a, np.eye(1))
            assert (ea * ea).allclose(ea)
            for b in atoms[i + 1:]:
                eb = LevelledElement.from_atom(model, C, d, b, np.eye(1))
                assert (ea * eb).norm() == 0.0


def test_mixed_depth_arithmetic():
    model = AbelianToeplitzModel(1)
    one = LevelledElement.unit(model, C)        # depth (0,)
    eps0 = LevelledElement.from_atom(model, C, (1,), (0,), np.eye(1))
    # 1 - eps0 is the tail at depth 1
    tail = one - eps0
    assert tail.depth == (1,)
    assert np.allclose(tail.coefficient((1,)), 1.0)
    assert np.allclose(tail.coefficient((0,)), 0.0)
    assert (tail * eps0).norm() == 0.0


def test_vec_roundtrip():
    model = FreeBoundaryModel(2)
    rng = np.random.default_rng(8)
    coeffs = {atom: random_matrix(rng, 2) for atom in model.atoms(2)}
    x = LevelledElement(model, M2, 2, coeffs)
    v = x.vec()
    assert v.shape == (vec_dim(model, M2, 2),)
    back = LevelledElement.from_vec(model, M2, 2, v)
    assert back.allclose(x)


def test_element_json_roundtrip():
    from lcm_dilate.algebras import element_from_json, element_to_json

    rng = np.random.default_rng(9)
    cases = [
        (AbelianToeplitzModel(2), M2, (2, 1)),
        (FreeToeplitzModel(2), C, 2),
        (FreeBoundaryModel(2), M2, 1),
        (PointModel(1), M2, 0),
    ]
    for model, base, depth in cases:
        d = model.normalize_depth(depth)
        coeffs = {atom: random_matrix(rng, base.dim) for atom in model.atoms(d)}
        x = LevelledElement(model, base, d, coeffs)
        doc = element_to_json(x)
        import json

        back = element_from_json(model, base, json.loads(json.dumps(doc)))
        assert back.allclose(x, 1e-14)


def test_depth_mismatch_errors():
    model = AbelianToeplitzModel(2)
    x = LevelledElement.unit(model, C, (2, 1))
    with pytest.raises(SpecMismatchError):
        x.refine_to((1, 1))
    y = LevelledElement.unit(AbelianToeplitzModel(1), C)
    with pytest.raises(SpecMismatchError):
        x * y


@given(
    data=st.lists(
        st.tuples(st.integers(0, 2), st.floats(-2, 2), st.floats(-2, 2)),
        min_size=1, max_size=6,
    )
)
@settings(max_examples=50, deadline=None)
def test_algebra_axioms_scalar_halfline(data):
    """Associativity and the *-identity on random elements of the rank-1
    half-line model with scalar values."""
    model = AbelianToeplitzModel(1)
    xs = []
    for k in range(3):
        coeffs = {}
        for atom, re, im in data[k::3]:
            coeffs[(atom,)] = np.array([[re + 1j * im]])
        xs.append(LevelledElement(model, C, (2,), coeffs))
    while len(xs) < 3:
        xs.append(LevelledElement.unit(model, C, (2,)))
    x, y, z = xs
    assert ((x * y) * z).allclose(x * (y * z), 1e-12)
    assert (x * y).star().allclose(y.star() * x.star(), 1e-12)
    assert ((x + y) * z).allclose(x * z + y * z, 1e-12)
