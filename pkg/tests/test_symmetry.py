import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorcommutant.errors import BadParams, DimMissing, ParseError, SizeOverflow
from tensorcommutant.symmetry import (
    STREAM_CONSTRAINT,
    STREAM_VERIFY,
    instantiate_word,
    is_homomorphic,
    parse_word,
    permutation_matrix,
    phased_permutation,
    sample_assignment,
    sample_haar_orthogonal,
    sample_haar_unitary,
    sample_permutation,
    structured_assignments,
    structured_generators,
    structured_set,
    substream,
    unitary_2x2,
)


def test_parse_basic():
    w = parse_word("U,U,U^H", {"U": 3})
    assert w.factors == (("U", "id"), ("U", "id"), ("U", "conj_transpose"))
    assert w.total_dim == 27
    assert w.text == "U,U,U^H"
    assert w.single_variable() == "U"


def test_parse_whitespace_and_modifiers():
    w = parse_word(" U , V* ,U^T, V^H ", {"U": 2, "V": 3})
    assert [m for _, m in w.factors] == ["id", "conj", "transpose", "conj_transpose"]
    assert w.var_names == ["U", "V"]
    assert w.factor_dims == [2, 3, 2, 3]
    assert w.single_variable() is None


def test_parse_real_group_normalizes_modifiers():
    w = parse_word("O,O*,O^H", {"O": 3}, {"O": "orthogonal"})
    assert [m for _, m in w.factors] == ["id", "id", "transpose"]


@pytest.mark.parametrize(
    "text, pos",
    [("", 0), ("U,,U", 2), ("U^X", 1), ("U,", 2), ("1U", 0), ("U;U", 1)],
)
def test_parse_errors_report_position(text, pos):
    with pytest.raises(ParseError) as exc:
        parse_word(text, {"U": 2})
    assert exc.value.position == pos


def test_parse_missing_dim_and_bad_group():
    with pytest.raises(DimMissing):
        parse_word("U,V", {"U": 2})
    with pytest.raises(BadParams):
        parse_word("U", {"U": 2}, {"U": "symplectic"})
    with pytest.raises(BadParams):
        parse_word("U", {"U": 0})


def test_parse_size_cap():
    with pytest.raises(SizeOverflow):
        parse_word("U,U,U", {"U": 17})
    assert parse_word("U,U,U", {"U": 16}).total_dim == 4096


def test_instantiate_matches_numpy_kron():
    u = sample_haar_unitary(2, 1)
    v = sample_haar_unitary(3, 2)
    w = parse_word("U,V^H,U*", {"U": 2, "V": 3})
    got = instantiate_word(w, {"U": u, "V": v})
    want = np.kron(np.kron(u, v.conj().T), u.conj())
    np.testing.assert_allclose(got, want, atol=1e-14)


def _haar_moment(sampler, n=2, count=10_000):
    return np.mean([abs(sampler(n, s)[0, 0]) ** 2 for s in range(count)])


def test_haar_unitary_first_moment():
    # E|U_11|^2 = 1/n for Haar unitaries
    assert abs(_haar_moment(sample_haar_unitary) - 0.5) < 0.02


def test_haar_unitary_second_moment():
    # E|U_11|^4 = 2/(n(n+1)) = 1/3 at n = 2
    vals = [abs(sample_haar_unitary(2, s)[0, 0]) ** 4 for s in range(10_000)]
    assert abs(np.mean(vals) - 1 / 3) < 0.02


def test_haar_unitary_e_u11_squared_is_quarter():
    # E|U_11|^2 = 1/4 at n = 4
    assert abs(_haar_moment(sample_haar_unitary, n=4) - 0.25) < 0.02


def test_haar_orthogonal_moments():
    # E O_11^2 = 1/n and E O_11^4 = 3/(n(n+2))
    samples = np.array([sample_haar_orthogonal(3, s)[0, 0] for s in range(10_000)])
    assert np.isrealobj(samples) or np.abs(np.imag(samples)).max() == 0
    assert abs(np.mean(np.real(samples) ** 2) - 1 / 3) < 0.02
    assert abs(np.mean(np.real(samples) ** 4) - 0.2) < 0.02


def test_haar_samples_are_unitary_and_reproducible():
    for n in (1, 2, 5):
        u = sample_haar_unitary(n, 7)
        assert np.linalg.norm(u.conj().T @ u - np.eye(n)) < 1e-12
        np.testing.assert_array_equal(u, sample_haar_unitary(n, 7))
        o = sample_haar_orthogonal(n, 7)
        assert np.linalg.norm(o.T @ o - np.eye(n)) < 1e-12
    assert not np.allclose(sample_haar_unitary(3, 7), sample_haar_unitary(3, 8))


def test_haar_orthogonal_reaches_both_components():
    dets = {round(float(np.real(np.linalg.det(sample_haar_orthogonal(3, s))))) for s in range(50)}
    assert dets == {-1, 1}


def test_sample_permutation():
    p = sample_permutation(5, 3)
    assert sorted(np.real(p).sum(axis=0)) == [1] * 5
    assert set(np.unique(np.real(p))) <= {0.0, 1.0}


def test_substreams_independent_of_call_order():
    a1 = substream(4, STREAM_CONSTRAINT, 0, 3).normal(size=3)
    substream(4, STREAM_VERIFY, 0, 0).normal(size=100)
    a2 = substream(4, STREAM_CONSTRAINT, 0, 3).normal(size=3)
    np.testing.assert_array_equal(a1, a2)
    b = substream(4, STREAM_VERIFY, 0, 3).normal(size=3)
    assert not np.allclose(a1, b)


def test_sample_assignment_distinct_per_variable():
    w = parse_word("U,V", {"U": 2, "V": 2})
    g = sample_assignment(w, seed=1, index=0)
    assert not np.allclose(g["U"], g["V"])
    g2 = sample_assignment(w, seed=1, index=0)
    np.testing.assert_array_equal(g["U"], g2["U"])


def test_unitary_2x2_examples():
    e = lambda t: np.exp(1j * t)  # noqa: E731
    np.testing.assert_allclose(unitary_2x2(0, 0, 0, 0), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(
        unitary_2x2(math.pi / 2, 0, 0, 0), [[0, -1], [1, 0]], atol=1e-15
    )
    t, a, b, p = 0.4, 0.3, -1.1, 2.0
    want = np.array(
        [[e(a) * math.cos(t), -e(p - b) * math.sin(t)], [e(b) * math.sin(t), e(p - a) * math.cos(t)]]
    )
    np.testing.assert_allclose(unitary_2x2(t, a, b, p), want, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(*[st.floats(min_value=-7, max_value=7) for _ in range(4)])
def test_unitary_2x2_is_unitary_with_det(theta, alpha, beta, phi):
    u = unitary_2x2(theta, alpha, beta, phi)
    assert np.linalg.norm(u.conj().T @ u - np.eye(2)) < 1e-12
    assert abs(np.linalg.det(u) - np.exp(1j * phi)) < 1e-12


def test_permutation_and_phased_permutation():
    p = permutation_matrix(3, 1, 3)
    np.testing.assert_array_equal(p, [[0, 0, 1], [0, 1, 0], [1, 0, 0]])
    q = phased_permutation(3, 1, 2, 0.5, 1.5)
    want = np.array([[0, np.exp(1.5j), 0], [np.exp(0.5j), 0, 0], [0, 0, 1]])
    np.testing.assert_allclose(q, want, atol=1e-15)
    with pytest.raises(BadParams):
        phased_permutation(3, 2, 2, 0, 0)


def test_proof_generators_literal():
    np.testing.assert_array_equal(structured_generators("proof_U1", 2)[0], [[0, 1], [1j, 0]])
    np.testing.assert_array_equal(structured_generators("proof_U2", 2)[0], [[0, 1j], [1, 0]])
    u3 = structured_generators("proof_U3", 4)[0]
    np.testing.assert_array_equal(u3[:3, :3], [[0, 0, 1], [0, 1, 0], [1j, 0, 0]])
    assert u3[3, 3] == 1
    with pytest.raises(BadParams):
        structured_generators("proof_U3", 2)
    f = structured_generators("uniform_row", 3)[0]
    np.testing.assert_allclose(np.abs(f), np.full((3, 3), 1 / math.sqrt(3)))


@pytest.mark.parametrize("group", ["unitary", "orthogonal", "permutation"])
@pytest.mark.parametrize("n", [2, 3])
def test_structured_set_members_belong_to_group(group, n):
    for g in structured_set(group, n):
        assert np.linalg.norm(g.conj().T @ g - np.eye(n)) < 1e-12
        if group != "unitary":
            assert np.abs(g.imag).max() == 0
        if group == "permutation":
            assert set(np.unique(g.real)) <= {0.0, 1.0}


def test_structured_assignments_vary_one_variable():
    w = parse_word("U,V", {"U": 2, "V": 3})
    assigns = structured_assignments(w)
    assert len(assigns) == len(structured_set("unitary", 2)) + len(structured_set("unitary", 3))
    for g in assigns:
        trivial = [v for v in ("U", "V") if np.allclose(g[v], np.eye(g[v].shape[0]))]
        assert len(trivial) >= 1


@pytest.mark.parametrize(
    "text, expected",
    [
        ("U,U", True),
        ("U,U*", True),
        ("U^T,U^H", True),
        ("U,U^H", False),
        ("U,U,U^T", False),
        ("U,V^H", True),
    ],
)
def test_is_homomorphic(text, expected):
    assert is_homomorphic(parse_word(text, {"U": 2, "V": 2})) is expected
