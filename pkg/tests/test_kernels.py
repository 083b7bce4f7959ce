import subprocess
import sys

import numpy as np
import pytest

from mamorl import _kernels
from mamorl.autodiff import optim

NP, NB = _kernels.NUMPY_KERNELS, _kernels.NUMBA_KERNELS


@pytest.mark.parametrize("seed", range(5))
def test_pareto_mask_agree(seed):
    pts = np.round(np.random.default_rng(seed).normal(size=(120, 3)), 1)
    assert np.array_equal(NP.pareto_mask(pts), NB.pareto_mask(pts))


@pytest.mark.parametrize("m", [2, 3])
def test_hv_agree(m, rng):
    for _ in range(5):
        pts = rng.uniform(0.1, 1.0, (12, m))
        pts = np.ascontiguousarray(pts[NP.pareto_mask(pts)])
        ref = np.zeros(m)
        kern = "hv2d" if m == 2 else "hv3d"
        assert getattr(NP, kern)(pts, ref) == pytest.approx(getattr(NB, kern)(pts, ref), rel=1e-13)


def test_mc_hits_agree(rng):
    pts = rng.uniform(0.1, 1.0, (6, 3))
    samples = rng.random((20_000, 3))
    assert NP.mc_hits(samples, pts) == NB.mc_hits(samples, pts)


def test_adam_kernels_agree(rng):
    shape = (7, 5)
    base = [rng.normal(size=shape) for _ in range(3)]
    grad = rng.normal(size=shape)
    v0 = np.abs(base[2])
    a = [base[0].copy(), base[1].copy(), v0.copy()]
    b = [base[0].copy(), base[1].copy(), v0.copy()]
    args = (1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001)
    optim._adam_update_np(a[0], grad.copy(), a[1], a[2], *args)  # kernels zero the gradient
    optim._adam_update_nb(b[0], grad.copy(), b[1], b[2], *args)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-14, atol=0)


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("", "numba"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    code = "from mamorl import _kernels; print(_kernels.ACTIVE.name)"
    proc = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env={"MAMORL_DISABLE_NUMBA": flag, "PATH": ""}
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == expected
