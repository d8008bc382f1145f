import math

import numpy as np
import pytest

from resonant_swipt.oracle import loss_upper_bound, steady_state_mode
from resonant_swipt.resonance import (DarkLinkError, LinkState, ResonanceEngine, bs_amplify, build_link,
                                      conjugate_retransmit, initial_excitation, run, step)

from conftest import single_ue


def test_initial_excitation_zero_phase():
    x = initial_excitation(4, 1.0, "zero")
    assert np.array_equal(x, np.full(4, 0.5 + 0j))


def test_initial_excitation_random_power():
    x = initial_excitation(900, 10.0, "random", seed=7)
    assert np.allclose(np.abs(x) ** 2, 1 / 90)
    assert np.sum(np.abs(x) ** 2) == pytest.approx(10.0, rel=1e-13)
    assert np.array_equal(x, initial_excitation(900, 10.0, "random", seed=7))
    assert not np.array_equal(x, initial_excitation(900, 10.0, "random", seed=8))


def test_conjugate_retransmit():
    out = conjugate_retransmit(np.array([np.exp(1j * math.radians(30))]), 0.005)
    assert abs(out[0]) == pytest.approx(0.070711, abs=1e-6)
    assert math.degrees(np.angle(out[0])) == pytest.approx(-30.0)
    assert np.array_equal(conjugate_retransmit(np.zeros(3, complex), 0.5), np.zeros(3))
    v = np.array([1.0, 2.0, 0.5], dtype=complex)
    assert np.array_equal(conjugate_retransmit(v, 1.0), v)
    with pytest.raises(ValueError):
        conjugate_retransmit(v, 1.5)


def test_bs_amplify_small_input():
    gamma = 0.5
    z = np.array([math.sqrt(2 * 5e-6)], complex)  # (1 - gamma)|z|^2 = 5 uW at the amplifier
    out, g = bs_amplify(z, gamma, 10.0, 1e9)
    assert g == pytest.approx(2e6)
    assert 10 * math.log10(g) == pytest.approx(63.0, abs=0.02)
    assert np.sum(np.abs(out) ** 2) == pytest.approx(10.0)


def test_bs_amplify_cap_binds():
    z = np.array([math.sqrt(20.0)], complex)
    out, g = bs_amplify(z, 0.0, 10.0, 1e9)
    assert g == pytest.approx(0.5)
    assert np.sum(np.abs(out) ** 2) == pytest.approx(10.0)


def test_bs_amplify_ceiling():
    z = np.array([1e-6], complex)
    out, g = bs_amplify(z, 0.0, 10.0, 100.0)
    assert g == 100.0
    assert np.sum(np.abs(out) ** 2) == pytest.approx(100 * 1e-12)


def test_bs_amplify_dark():
    with pytest.raises(DarkLinkError, match="link dark: no return power"):
        bs_amplify(np.zeros(4, complex), 0.995, 10.0, 1e9)


def test_scalar_loss_closed_form():
    s = single_ue(1, 1)
    link = build_link(s, 1)
    tr = run(s)[1]
    hd, hu = link.h_dl.entries[0, 0], link.h_ul.entries[0, 0]
    expect = (1 - s.control.alpha) * (1 - s.control.gamma) * abs(hd) ** 2 * abs(hu) ** 2
    for r in tr.records:
        assert r.loss == pytest.approx(expect, rel=1e-12)


def test_full_harvest_goes_dark():
    s = single_ue(2, 2).with_control(alpha=0.9999999)
    link = build_link(s, 1)
    link = type(link)(**{**link.__dict__, "alpha": 1.0})
    with pytest.raises(DarkLinkError, match="link dark"):
        step(link, LinkState(initial_excitation(link.m, 1.0, "zero")))


def test_gain_is_previous_amplifier_gain():
    s = single_ue(4, 4, 29e9, 30e9)
    tr = run(s)[1]
    assert math.isnan(tr.records[0].gain)
    for prev, r in zip(tr.records, tr.records[1:]):
        assert r.gain == pytest.approx(prev.g_pa_effective, rel=1e-12)


def test_gain_times_loss_is_one_when_cap_binds():
    s = single_ue(4, 4, 29e9, 30e9, g_pa_max=1e15)
    tr = run(s)[1]
    assert tr.converged
    for r in [r for r in tr.records if r.converged]:
        assert r.gain * r.loss == pytest.approx(1.0, rel=1e-6)


def test_power_cap_respected():
    s = single_ue(3, 3)
    tr = run(s)[1]
    for r in tr.records:
        assert r.p_bs_tx <= s.control.p_cap_total * (1 + 1e-12)


def test_infinite_tolerance_converges_at_one():
    s = single_ue(2, 2).with_control(conv_tol=math.inf)
    tr = run(s)[1]
    assert tr.iterations_to_converge == 1


def test_max_iters_non_convergence():
    s = single_ue(3, 3, 29e9, 30.5e9).with_control(max_iters=2)
    tr = run(s)[1]
    assert not tr.converged and len(tr.records) == 2


def test_determinism(default16):
    a = run(default16, keep_history=True)
    b = run(default16, keep_history=True, workers=2)
    for k in a:
        assert [r.loss for r in a[k].records] == [r.loss for r in b[k].records]
        assert np.array_equal(a[k].final_state.bs_amplitudes, b[k].final_state.bs_amplitudes)


def test_link_isolation(default16):
    from dataclasses import replace
    swapped = replace(default16, ues=default16.ues[::-1])
    a, b = run(default16), run(swapped)
    for k in a:
        assert [r.loss for r in a[k].records] == [r.loss for r in b[k].records]


def test_power_iteration_monotone():
    s = single_ue(5, 5, 29e9, 29e9, position=(0.6, 0.3, 1.5))
    tr = run(s)[1]
    l = tr.losses()
    assert np.all(np.diff(l) >= -1e-12 * l.max())


def test_matches_oracle_and_bound():
    s = single_ue(4, 4, 29e9, 29e9)
    link = build_link(s, 1)
    tr = run(s)[1]
    p = steady_state_mode(link.h_dl, link.h_ul, s.control.alpha, s.control.gamma)
    assert tr.steady_loss == pytest.approx(p.dominant_loss, rel=1e-3)
    assert tr.steady_loss <= loss_upper_bound(link.h_dl, link.h_ul, s.control.alpha, s.control.gamma) * (1 + 1e-12)


def test_default_scenario_converges_ue1_ahead(default16):
    eng = ResonanceEngine(default16)
    tr = eng.run()
    assert all(t.converged for t in tr.values())
    eta = {k: t.final.p_ue_rx / t.final.p_bs_tx for k, t in tr.items()}
    assert eta[1] >= eta[2]
    # passive propagation: nothing gained over the air
    for t in tr.values():
        assert t.final.p_ue_rx <= t.final.p_bs_tx


def test_history_lengths():
    tr = run(single_ue(2, 2), keep_history=True)[1]
    assert len(tr.bs_history) == len(tr.records) == len(tr.ue_history)
