import json
import subprocess
import sys

import numpy as np
import pytest

from kdquasi import linalg
from kdquasi.quantum import (
    DensityMatrix,
    Povm,
    ValidationError,
    computational_pvm,
    haar_unitary,
    make_rng,
    maximally_mixed,
    pure_state,
    random_density,
    random_povm,
    random_pure,
    random_pvm,
    theorem1_example,
    trivial_povm,
)


def check_density(rho: DensityMatrix):
    m = rho.mat
    d = rho.dim
    assert np.max(np.abs(m - m.conj().T)) <= 1e-10
    assert linalg.eigvalsh(m)[0] >= -1e-9
    assert abs(np.trace(m) - 1) < 1e-10
    assert 1 / d - 1e-9 <= rho.purity <= 1 + 1e-9


def check_povm(p: Povm):
    d = p.dim
    for e in p:
        assert linalg.eigvalsh(e)[0] >= -1e-9
    assert np.max(np.abs(sum(p) - np.eye(d))) <= 1e-9


def test_pure_state_examples():
    assert np.allclose(pure_state([1, 0]).mat, np.diag([1, 0]), atol=0)
    assert np.allclose(pure_state([1, 1]).mat, np.full((2, 2), 0.5), atol=1e-15)
    assert np.allclose(pure_state([2, 0]).mat, np.diag([1, 0]), atol=0)
    assert abs(pure_state([1, 2j, -3]).purity - 1) < 1e-10
    with pytest.raises(ValueError):
        pure_state([0, 0])


def test_maximally_mixed():
    assert np.allclose(maximally_mixed(2).mat, np.eye(2) / 2, atol=0)
    assert maximally_mixed(4).purity == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        maximally_mixed(0)


def test_density_validation_rejects():
    with pytest.raises(ValidationError, match="trace"):
        DensityMatrix(np.eye(2))
    with pytest.raises(ValidationError, match="PSD"):
        DensityMatrix(np.diag([1.1, -0.1]))
    with pytest.raises(ValidationError, match="Hermitian"):
        DensityMatrix([[0.5, 0.1], [0.0, 0.5]])
    with pytest.raises(ValueError):
        DensityMatrix([[np.inf, 0], [0, 0]])


def test_density_is_immutable():
    rho = maximally_mixed(2)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


def test_random_pure_determinism_and_purity():
    a = random_pure(2, make_rng(42))
    b = random_pure(2, make_rng(42))
    assert np.array_equal(a.mat, b.mat)
    assert abs(a.purity - 1) < 1e-10


def test_random_pure_haar_average():
    # Monte-Carlo oracle: the Haar average of |psi><psi| is identity / d
    rng = make_rng(2024)
    mean = sum(random_pure(2, rng).mat for _ in range(10_000)) / 10_000
    assert np.max(np.abs(mean - np.eye(2) / 2)) < 0.02


def test_random_density():
    assert abs(random_density(3, 1, 5).purity - 1) < 1e-10
    check_density(random_density(2, 2, 7))
    with pytest.raises(ValueError):
        random_density(3, 4, 0)
    with pytest.raises(ValueError):
        random_density(3, 0, 0)


def test_random_density_purity_decreases_with_rank():
    rng = make_rng(11)
    full = np.median([random_density(4, 4, rng).purity for _ in range(200)])
    rank1 = np.median([random_density(4, 1, rng).purity for _ in range(200)])
    assert full < rank1


def test_random_pvm():
    p = random_pvm(4, 3)
    assert p.projective
    assert np.max(np.abs(sum(p) - np.eye(4))) < 1e-9
    for i in range(4):
        for j in range(4):
            prod = p[i] @ p[j]
            if i != j:
                assert np.max(np.abs(prod)) < 1e-9
            assert np.trace(prod).real <= 1 + 1e-12


@pytest.mark.parametrize("d", range(1, 9))
def test_haar_unitary_is_unitary(d):
    u = haar_unitary(d, d)
    assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-10


def test_random_povm():
    p = random_povm(2, 2, 9)
    check_povm(p)
    assert not p.projective
    for e in random_povm(3, 5, 4):
        w = linalg.eigvalsh(e)
        assert w[0] >= -1e-9 and w[-1] <= 1 + 1e-9
        # E^2 <= E, the operator inequality behind the entrywise bound
        assert linalg.eigvalsh(e - e @ e)[0] >= -1e-9
    with pytest.raises(ValueError):
        random_povm(2, 1, 0)


def test_povm_validation():
    with pytest.raises(ValidationError, match="identity"):
        Povm([np.eye(2), np.eye(2)])
    with pytest.raises(ValidationError, match="PSD"):
        Povm([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])
    # zero elements are allowed
    p = Povm([np.eye(2), np.zeros((2, 2))])
    assert p.projective
    assert trivial_povm(3).projective


def test_projective_flag_is_computed():
    assert computational_pvm(3).projective
    half = np.eye(2) / 2
    assert not Povm([half, half]).projective


def test_theorem1_example():
    rho, X, Y = theorem1_example()
    assert X.projective and Y.projective
    assert X.probabilities(rho)[0] == pytest.approx(0.5, abs=1e-15)
    assert Y.probabilities(rho)[0] == pytest.approx(0.75, abs=1e-15)
    py = Y[0]
    assert np.max(np.abs(py @ py - py)) < 1e-12
    v = np.array([np.sqrt(3), 1]) / 2
    assert np.allclose(py, np.outer(v, v), atol=1e-15)


CONSTRUCTORS = {
    "random_pure": lambda d, rng: random_pure(d, rng),
    "random_density": lambda d, rng: random_density(d, int(rng.integers(1, d + 1)), rng),
    "random_pvm": lambda d, rng: random_pvm(d, rng),
    "random_povm": lambda d, rng: random_povm(d, int(rng.integers(2, d + 2)), rng),
}


@pytest.mark.parametrize("name", sorted(CONSTRUCTORS))
def test_constructor_fuzz(name):
    make = CONSTRUCTORS[name]
    for seed in range(500):
        d = 2 + seed % 7
        out = make(d, make_rng(seed))
        if isinstance(out, DensityMatrix):
            check_density(out)
        else:
            # validated at construction; re-validate independently of the flag
            assert np.max(np.abs(sum(out) - np.eye(d))) <= 1e-9
            if name == "random_pvm":
                assert out.projective


DETERMINISM_SCRIPT = """
import json
from kdquasi.quantum import make_rng, random_density, random_povm, random_pvm
rng = make_rng(99)
print(json.dumps([random_density(3, 2, rng).to_json(), random_povm(3, 4, rng).to_json(),
                  random_pvm(4, rng).to_json()]))
"""


def test_determinism_across_processes():
    runs = [subprocess.run([sys.executable, "-c", DETERMINISM_SCRIPT], capture_output=True, check=True).stdout
            for _ in range(2)]
    assert runs[0] == runs[1] and len(runs[0]) > 100


def test_json_round_trip_bit_exact():
    rho = random_density(5, 3, 1)
    back = DensityMatrix.from_json(json.loads(json.dumps(rho.to_json())))
    assert np.array_equal(back.mat, rho.mat)
    obj = rho.to_json()
    assert obj["dim"] == 5 and len(obj["entries"]) == 25 and obj["entries"][1] == [rho.mat[0, 1].real, rho.mat[0, 1].imag]

    p = random_povm(3, 4, 2)
    back = Povm.from_json(json.loads(json.dumps(p.to_json())))
    assert np.array_equal(back.elements, p.elements)
    assert back.projective is False

    pvm = random_pvm(3, 3)
    assert json.loads(json.dumps(pvm.to_json()))["projective"] is True


def test_povm_json_projective_flag_checked():
    obj = computational_pvm(2).to_json()
    obj["projective"] = False
    with pytest.raises(ValidationError):
        Povm.from_json(obj)
