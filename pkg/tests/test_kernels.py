import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gdrb import kernels
from gdrb.chanalg import ket0_state
from gdrb.errors import ValidationError
from gdrb.groups import get_group
from gdrb.noise import random_unitary_gateset

needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled kernels not built")

GS = random_unitary_gateset(get_group("t_pauli"), 2e-2, 21)
ARGS = (
    np.ascontiguousarray(GS.noisy_stack),
    np.ascontiguousarray(GS.group.mult),
    np.ascontiguousarray(GS.group.inv),
    GS.group.identity_index,
)
RHO = ket0_state()


def _reference(seq):
    v = RHO
    for g in seq:
        v = GS.noisy_stack[g] @ v
    return RHO @ GS.noisy_stack[GS.group.sequence_inverse(seq)] @ v


@given(st.lists(st.lists(st.integers(0, 11), min_size=7, max_size=7), min_size=1, max_size=12))
def test_python_survival_matches_reference(seqs):
    seqs = np.array(seqs, dtype=np.int64)
    out = kernels.get_backend("python").survival_batch(*ARGS, seqs, RHO, RHO)
    assert np.allclose(out, [_reference(list(s)) for s in seqs], atol=1e-13)


@needs_cython
@given(st.lists(st.lists(st.integers(0, 11), min_size=5, max_size=5), min_size=1, max_size=12))
def test_backends_agree_on_sequences(seqs):
    seqs = np.array(seqs, dtype=np.int64)
    a = kernels.get_backend("python").survival_batch(*ARGS, seqs, RHO, RHO)
    b = kernels.get_backend("cython").survival_batch(*ARGS, seqs, RHO, RHO)
    assert np.allclose(a, b, atol=1e-14, rtol=0)


@needs_cython
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_backends_agree_on_enumeration(m):
    a = kernels.get_backend("python").enumerate_average(*ARGS, m, RHO, RHO)
    b = kernels.get_backend("cython").enumerate_average(*ARGS, m, RHO, RHO)
    assert a == pytest.approx(b, abs=1e-14)


def test_python_enumeration_chunks(monkeypatch):
    from gdrb import _pykernels

    full = _pykernels.enumerate_average(*ARGS, 3, RHO, RHO)
    monkeypatch.setattr(_pykernels, "_CHUNK", 20)
    assert _pykernels.enumerate_average(*ARGS, 3, RHO, RHO) == pytest.approx(full, abs=1e-15)


def test_unknown_backend():
    with pytest.raises(ValidationError):
        kernels.get_backend("fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, GDRB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import gdrb.kernels as k; print(k.DEFAULT_BACKEND, sorted(k.BACKENDS))"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == "python"
