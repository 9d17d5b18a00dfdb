import cmath
import math

import numpy as np
import pytest

from phasecode.core import ParameterError, SparseSignal, align_global_phase
from phasecode.nonsparse import (
    DegenerateAnchorError,
    InconsistentMeasurementsError,
    UnresolvableSpectrumError,
    chain_decode,
    chain_measure,
    ff_nonsparse_decode,
    ff_nonsparse_measure,
    solve_anchor_magnitude,
)


def _dense_signal(x):
    return SparseSignal(len(x), tuple((i + 1, complex(v)) for i, v in enumerate(x)))


def _aligned_residual(xhat, x):
    est = [(i + 1, complex(v)) for i, v in enumerate(xhat)]
    return align_global_phase(est, _dense_signal(x))


def _random_dense(rng, n, anchor_floor=0.1):
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    while abs(x[0]) < anchor_floor:
        x[0] = complex(rng.normal(), rng.normal())
    return x


# ---------------------------------------------------------------------------
# General chain scheme
# ---------------------------------------------------------------------------

def test_measurement_count_is_3n_minus_2():
    rng = np.random.default_rng(0)
    meas = chain_measure(_random_dense(rng, 16))
    assert meas.count == 3 * 16 - 2
    assert len(meas.mags) == 16
    assert len(meas.sums) == 15
    assert len(meas.rotated_sums) == 15


def test_rotated_sum_cosine_law_for_real_signal():
    n = 8
    x = np.array([1.5, 2.0] + [0.3] * (n - 2))
    meas = chain_measure(x)
    w = meas.omega
    expected_sq = x[0] ** 2 + x[1] ** 2 + 2 * x[0] * x[1] * math.cos(w)
    assert abs(meas.rotated_sums[0] ** 2 - expected_sq) < 1e-12


def test_impulse_signal_sums():
    x = np.zeros(10, dtype=complex)
    x[0] = 2.5
    meas = chain_measure(x)
    assert np.allclose(meas.sums, 2.5)
    assert np.allclose(meas.rotated_sums, 2.5)


def test_chain_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = _random_dense(rng, 256)
        xhat = chain_decode(chain_measure(x))
        assert _aligned_residual(xhat, x) <= 1e-8


def test_chain_real_positive_signal_no_ambiguity():
    # all phases zero: both arccos branches coincide; this sits exactly on
    # the arccos conditioning singularity, so expect ~sqrt(eps) accuracy
    rng = np.random.default_rng(2)
    x = np.abs(rng.normal(size=64)) + 0.05
    xhat = chain_decode(chain_measure(x.astype(complex)))
    assert _aligned_residual(xhat, x) <= 1e-6
    assert np.max(np.abs(xhat.imag)) < 1e-6


def test_chain_zero_components_returned_as_zero():
    rng = np.random.default_rng(3)
    x = _random_dense(rng, 32)
    x[5] = 0.0
    x[17] = 0.0
    xhat = chain_decode(chain_measure(x))
    assert xhat[5] == 0.0
    assert xhat[17] == 0.0
    nz = [(i + 1, complex(v)) for i, v in enumerate(xhat) if v != 0]
    truth = SparseSignal(32, tuple((i + 1, complex(v)) for i, v in enumerate(x) if v != 0))
    assert align_global_phase(nz, truth) <= 1e-8


def test_chain_sign_check_degeneracy_is_rare():
    # over many random component pairs, the two arccos branches never both
    # match the rotated sum (away from the phi = 0 / pi coincidences)
    rng = np.random.default_rng(4)
    n = 1000
    omega = math.pi / (2 * n)
    both = 0
    for _ in range(10_000):
        x1 = abs(rng.normal()) + 0.05
        x2 = complex(rng.normal(), rng.normal())
        if abs(x2) < 0.05:
            continue
        ell = int(rng.integers(2, n + 1))
        y_sum = abs(x1 + x2)
        y_rot = abs(x1 + cmath.exp(1j * omega * (ell - 1)) * x2)
        carg = (y_sum**2 - x1**2 - abs(x2) ** 2) / (2 * x1 * abs(x2))
        phi0 = math.acos(min(max(carg, -1.0), 1.0))
        if min(abs(phi0), abs(math.pi - phi0)) < 1e-6:
            continue  # the two branches legitimately coincide
        target = (y_rot**2 - x1**2 - abs(x2) ** 2) / (2 * x1 * abs(x2))
        errs = [abs(math.cos(s * phi0 + omega * (ell - 1)) - target) for s in (1, -1)]
        if max(errs) < 1e-9:
            both += 1
    assert both == 0


def test_chain_anchor_choice_is_free():
    rng = np.random.default_rng(5)
    x = _random_dense(rng, 64)
    ref = chain_decode(chain_measure(x, anchor=1))
    for anchor in (2, 17, 64):
        if abs(x[anchor - 1]) < 0.05:
            continue
        alt = chain_decode(chain_measure(x, anchor=anchor))
        est = [(i + 1, complex(v)) for i, v in enumerate(alt)]
        assert align_global_phase(est, _dense_signal(ref)) <= 1e-8


def test_chain_rejects_zero_anchor():
    x = np.zeros(16, dtype=complex)
    x[3] = 1.0
    with pytest.raises(DegenerateAnchorError):
        chain_decode(chain_measure(x))


def test_chain_measurements_blind_to_global_phase():
    rng = np.random.default_rng(6)
    x = _random_dense(rng, 40)
    a = chain_measure(x)
    b = chain_measure(x * cmath.exp(0.77j))
    assert np.max(np.abs(a.mags - b.mags)) < 1e-12
    assert np.max(np.abs(a.sums - b.sums)) < 1e-12
    assert np.max(np.abs(a.rotated_sums - b.rotated_sums)) < 1e-12


# ---------------------------------------------------------------------------
# Fourier-friendly scheme
# ---------------------------------------------------------------------------

def test_ff_measurement_count_is_3n():
    rng = np.random.default_rng(7)
    meas = ff_nonsparse_measure(_random_dense(rng, 32))
    assert meas.count == 96


def test_ff_impulse_doubles():
    x = np.zeros(16, dtype=complex)
    x[0] = 1.0
    meas = ff_nonsparse_measure(x)
    assert np.allclose(meas.plain, 1.0)
    assert np.allclose(meas.boosted, 2.0)  # doubling the only nonzero sample
    assert np.allclose(meas.rotated, abs(1 + 1j))


def test_ff_identity_mask_is_plain_spectrum():
    rng = np.random.default_rng(8)
    x = _random_dense(rng, 64)
    meas = ff_nonsparse_measure(x)
    assert np.allclose(meas.plain, np.abs(np.fft.fft(x)))


def test_ff_parseval_under_unnormalized_dft():
    rng = np.random.default_rng(9)
    x = _random_dense(rng, 128)
    meas = ff_nonsparse_measure(x)
    assert abs(np.sum(meas.plain**2) - 128 * np.sum(np.abs(x) ** 2)) < 1e-6


def test_anchor_magnitude_solver_contains_truth():
    rng = np.random.default_rng(10)
    for _ in range(200):
        X1 = complex(rng.normal(), rng.normal())
        x1 = complex(rng.normal(), rng.normal())
        if abs(X1) < 1e-3:
            continue
        roots = solve_anchor_magnitude(abs(X1), abs(X1 + x1), abs(X1 + 1j * x1))
        t = abs(x1) ** 2
        assert any(abs(r - t) < 1e-10 * max(1.0, t) for r in roots)
        assert len(roots) <= 2


def test_anchor_magnitude_solver_guards_zero_bin():
    with pytest.raises(ParameterError):
        solve_anchor_magnitude(0.0, 1.0, 1.0)


def test_anchor_magnitude_rejects_nonsense():
    with pytest.raises(InconsistentMeasurementsError):
        solve_anchor_magnitude(1.0, 10.0, 0.1)


def test_anchor_candidate_intersection_is_unique():
    # each bin offers <= 2 anchor-magnitude candidates; across all bins only
    # the true one stays consistent
    rng = np.random.default_rng(13)
    n = 16
    failures = 0
    for _ in range(2000):
        x = _random_dense(rng, n)
        meas = ff_nonsparse_measure(x)
        t_true = abs(x[0]) ** 2
        per_bin = [
            solve_anchor_magnitude(float(meas.plain[i]), float(meas.boosted[i]), float(meas.rotated[i]))
            for i in range(n)
        ]
        scale = max(max(c) for c in per_bin)

        def votes(t):
            return sum(
                1 for cands in per_bin if min(abs(t - u) for u in cands) <= 1e-8 * scale
            )

        if votes(t_true) != n:
            failures += 1
            continue
        impostors = {
            round(u, 12)
            for cands in per_bin
            for u in cands
            if abs(u - t_true) > 1e-6 * scale
        }
        if any(votes(u) == n for u in impostors):
            failures += 1
    assert failures == 0


def test_ff_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = _random_dense(rng, 128)
        xhat = ff_nonsparse_decode(ff_nonsparse_measure(x))
        assert _aligned_residual(xhat, x) <= 1e-8


def test_ff_real_symmetric_signal():
    # even real signal => real spectrum: the sine term crosses zero and both
    # cosine-law branches are exercised
    rng = np.random.default_rng(12)
    n = 64
    half = rng.normal(size=n // 2 - 1)
    x = np.zeros(n)
    x[0] = 1.3
    x[1 : n // 2] = half
    x[n // 2] = rng.normal()
    x[n // 2 + 1 :] = half[::-1]
    X = np.fft.fft(x)
    assert np.max(np.abs(X.imag)) < 1e-9
    xhat = ff_nonsparse_decode(ff_nonsparse_measure(x.astype(complex)))
    assert _aligned_residual(xhat, x) <= 1e-8


def test_ff_two_point_oracle():
    # n=2 closed form: X = (x1 + x2, x1 - x2)
    x = np.array([0.7 + 0.2j, -0.3 + 0.5j])
    meas = ff_nonsparse_measure(x)
    assert abs(meas.plain[0] - abs(x[0] + x[1])) < 1e-12
    assert abs(meas.plain[1] - abs(x[0] - x[1])) < 1e-12
    xhat = ff_nonsparse_decode(meas)
    assert _aligned_residual(xhat, x) <= 1e-10


def test_ff_zero_spectral_bin_is_reported():
    n = 32
    X = np.ones(n, dtype=complex)
    X[4] = 0.0
    x = np.fft.ifft(X)
    with pytest.raises(UnresolvableSpectrumError) as err:
        ff_nonsparse_decode(ff_nonsparse_measure(x))
    assert 5 in err.value.bins  # 1-based bin list
