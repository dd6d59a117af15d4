import math

import numpy as np
import pytest
from scipy.special import erfc

from uav_codesign.channel import (ChannelError, channel_gain,
                                  check_association, fbl_rate, gain_matrix,
                                  inverse_gaussian_q, link_state, sinr,
                                  sinr_matrix, throughput_per_robot)
from uav_codesign.scenario import RfParams


def gauss_q(x: float) -> float:
    return 0.5 * erfc(x / math.sqrt(2.0))


def qinv_bisect(eps: float) -> float:
    """Independent bisection oracle for the inverse tail function."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gauss_q(mid) > eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_gain_reference_distance():
    assert channel_gain([0, 0, 0], [1, 0, 0], 1.0) == 1.0


def test_gain_paper_constants():
    g = channel_gain([0, 0, 100.0], [0, 0, 0], 1.2589e-5)
    assert g == pytest.approx(1.2589e-9, rel=1e-12)


def test_gain_inverse_square():
    g1 = channel_gain([0, 0, 50.0], [0, 0, 0], 1.0)
    g2 = channel_gain([0, 0, 100.0], [0, 0, 0], 1.0)
    assert g1 == pytest.approx(4.0 * g2, rel=1e-12)


def test_gain_coincident_error():
    with pytest.raises(ChannelError):
        channel_gain([1, 2, 3], [1, 2, 3], 1.0)


def test_sinr_single_link_example():
    # one UAV: no interference, pure SNR
    val = sinr(0, 0, np.array([0.2]), np.array([[0.0, 0.0, 100.0]]),
               np.array([[0.0, 0.0, 0.0]]), noise=1e-14, alpha0=1.2589e-5)
    assert val == pytest.approx(2.5178e4, rel=1e-4)


def test_sinr_symmetric_pair():
    gains = np.array([[1e-9], [1e-9]])
    gamma = sinr_matrix(np.array([0.3, 0.3]), gains, noise=1e-30)
    assert gamma[0, 0] == pytest.approx(1.0, rel=1e-9)
    assert gamma[1, 0] == pytest.approx(1.0, rel=1e-9)


def test_sinr_zero_power():
    gains = np.array([[1e-9], [1e-9]])
    gamma = sinr_matrix(np.array([0.0, 0.3]), gains, noise=1e-14)
    assert gamma[0, 0] == 0.0


def test_sinr_interference_identity():
    # interference of all i != m equals total received minus own signal
    rng = np.random.default_rng(0)
    for _ in range(20):
        m, k = 5, 4
        gains = rng.uniform(1e-10, 1e-8, (m, k))
        p = rng.uniform(0.0, 0.3, m)
        noise = 1e-12
        gamma = sinr_matrix(p, gains, noise)
        received = p[:, None] * gains
        for i in range(m):
            for j in range(k):
                inter = sum(p[t] * gains[t, j] for t in range(m) if t != i)
                direct = received[i, j] / (inter + noise)
                assert gamma[i, j] == pytest.approx(direct, rel=1e-12)


def test_qinv_median():
    assert inverse_gaussian_q(0.5) == pytest.approx(0.0, abs=1e-12)


def test_qinv_urllc_point():
    ref = qinv_bisect(1e-5)
    val = inverse_gaussian_q(1e-5)
    assert val == pytest.approx(ref, abs=1e-9)
    assert val == pytest.approx(4.26489, abs=1e-5)


def test_qinv_symmetry_and_contract():
    for eps in (1e-7, 1e-5, 1e-3, 0.1, 0.4):
        v = inverse_gaussian_q(eps)
        assert v == pytest.approx(-inverse_gaussian_q(1.0 - eps), abs=1e-12)
        assert abs(gauss_q(v) - eps) <= 1e-9
    with pytest.raises(ChannelError):
        inverse_gaussian_q(0.0)
    with pytest.raises(ChannelError):
        inverse_gaussian_q(1.0)


def test_fbl_zero_sinr():
    assert fbl_rate(0.0, 1024, 1e-5) == 0.0


def test_fbl_shannon_limit():
    assert fbl_rate(1.0, 1e18, 1e-5) == pytest.approx(1.0, abs=1e-6)


def test_fbl_bits_example_high_precision():
    # oracle: 50-digit evaluation of log2(2) - sqrt(0.75/1024) Qinv log2(e)
    import mpmath
    mpmath.mp.dps = 50
    qinv = mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * mpmath.mpf("1e-5"))
    ref = 1 - mpmath.sqrt(mpmath.mpf(3) / 4 / 1024) * qinv / mpmath.log(2)
    val = fbl_rate(1.0, 1024, 1e-5, convention="bits")
    assert val == pytest.approx(float(ref), rel=1e-12)
    assert val == pytest.approx(0.8335, abs=5e-5)


def test_fbl_nats_convention():
    qinv = inverse_gaussian_q(1e-5)
    expected = 1.0 - math.sqrt(0.75 / 1024) * qinv
    assert fbl_rate(1.0, 1024, 1e-5, convention="nats") == \
        pytest.approx(expected, rel=1e-12)
    with pytest.raises(ChannelError):
        fbl_rate(1.0, 1024, 1e-5, convention="dits")


def test_fbl_below_shannon_and_monotone_in_blocklength():
    gammas = np.geomspace(1e-3, 1e3, 25)
    prev_gap = None
    for l in (100, 300, 1000, 3000, 10000):
        rates = fbl_rate(gammas, l, 1e-5)
        shannon = np.log2(1.0 + gammas)
        gap = shannon - rates
        assert np.all(gap >= -1e-12)
        if prev_gap is not None:
            assert np.all(gap <= prev_gap + 1e-12)
        prev_gap = gap


def test_fbl_monotone_in_sinr_on_grid():
    for l in (100, 1024, 4096):
        for eps in (1e-7, 1e-5, 1e-3, 0.1):
            gammas = np.geomspace(1e-4, 1e4, 200)
            rates = fbl_rate(gammas, l, eps)
            assert np.all(np.diff(rates) >= -1e-12)


def test_throughput_unserved_robot():
    theta = np.zeros((2, 1))
    rates = np.array([[2.0], [3.0]])
    assert throughput_per_robot(theta, rates, 100.0)[0] == 0.0


def test_throughput_single_link():
    theta = np.array([[1.0], [0.0]])
    rates = np.array([[2.0], [3.0]])
    assert throughput_per_robot(theta, rates, 100.0)[0] == 200.0


def test_throughput_relaxed_mix():
    theta = np.array([[0.5], [0.5]])
    rates = np.array([[2.0], [4.0]])
    assert throughput_per_robot(theta, rates, 1.0)[0] == pytest.approx(3.0)


def test_throughput_infeasible_rejected():
    rates = np.ones((2, 2))
    with pytest.raises(ChannelError):
        throughput_per_robot(np.array([[1.0, 1.0], [0.0, 0.0]]), rates, 1.0)
    with pytest.raises(ChannelError):
        throughput_per_robot(np.array([[0.7], [0.7]]), np.ones((2, 1)), 1.0)
    with pytest.raises(ChannelError):
        check_association(np.array([[0.5], [0.4]]))


def test_link_state_consistency():
    rf = RfParams()
    positions = np.array([[10.0, 20.0, 100.0], [80.0, 90.0, 100.0]])
    robots = np.array([[15.0, 25.0, 0.0], [70.0, 80.0, 0.0]])
    p = np.array([0.4, 0.3])
    state = link_state(p, positions, robots, rf)
    assert state.gains.shape == state.sinr.shape == state.rate.shape == (2, 2)
    assert np.array_equal(state.gains, gain_matrix(positions, robots, rf.alpha0))
    assert np.all(state.rate <= np.log2(1.0 + state.sinr) + 1e-12)
    assert np.all(state.rate >= 0.0)
