import numpy as np
import pytest

from ramanmem.memory import (ProtocolError, ProtocolRun, best_classical, classical_benchmark,
                             fidelity_report, make_run, mode_variance_pairs, optimize_readout_mode,
                             quantum_fidelity, read_input_state, regime_windows, run_read, run_write,
                             snap_kappa1)
from ramanmem.spectral import SqueezedInput, mandel_spectrum


def stored_min(atl, n=256):
    run = make_run(atl, atl / 5, 10.0, None, n=n)
    return mode_variance_pairs(run_write(run), "T")[1].min()


class TestSetup:
    def test_rejects_positive_ATL(self):
        with pytest.raises(ProtocolError):
            make_run(10.0, -2.0, 10.0)

    def test_read_stage_shares_sample(self):
        run = make_run(-10.0, -2.0, 10.0, n=32)
        assert run.read.epsilon == run.write.epsilon and run.read.Fz_bar == run.write.Fz_bar
        assert run.read.ATL == pytest.approx(-2.0)

    def test_sample_length_must_match(self):
        run = make_run(-10.0, -2.0, 10.0, n=32)
        with pytest.raises(ProtocolError):
            ProtocolRun(run.write, run.read.replace(L=2.0), run.input)

    def test_snap_kappa1(self):
        assert snap_kappa1(7.0, 1.0) == pytest.approx(2 * np.pi)
        run = make_run(-10.0, -2.0, 10.0, n=32, kappa1=7.0)
        assert run.write.kappa1 * run.write.L == pytest.approx(2 * np.pi)

    def test_windows(self):
        w = regime_windows(make_run(-10.0, -2.0, 10.0, 10.0, n=32))
        assert w["q_c"] == pytest.approx(np.sqrt(10.0))
        assert w["Omega_c_read"] == pytest.approx(np.sqrt(2.0))
        assert w["collective_window"] is False


class TestStorage:
    def test_monotone_in_coupling(self):
        vals = [stored_min(a) for a in (-1.0, -2.0, -5.0, -10.0, -20.0, -40.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_swap_limit(self):
        assert stored_min(-100.0) == pytest.approx(0.1, rel=0.05)

    def test_lowest_cosine_mode_approaches_swap_limit(self):
        excess = []
        for atl in (-10.0, -40.0, -100.0):
            st = run_write(make_run(atl, atl / 5, 10.0, None, n=256))
            excess.append(mandel_spectrum(st, "T_I").values[0] - 0.1)
        assert excess[0] > excess[1] > excess[2] > 0

    def test_read_input_keeps_stored_spin(self):
        run = make_run(-10.0, -2.0, 10.0, n=32)
        post = run_write(run)
        st = read_input_state(post, run)
        np.testing.assert_array_equal(st.block("T_I"), post.block("T_I"))
        np.testing.assert_array_equal(st.block("Xi_I"), np.eye(32))

    @pytest.mark.parametrize("atl", [-10.0, -40.0])
    def test_matched_retrieval_is_not_identity(self, atl):
        run = make_run(atl, atl, 10.0, None, n=128)
        post = run_write(run)
        stored = mode_variance_pairs(post, "T")[1].min()
        _, (v1, _) = optimize_readout_mode(run_read(post, run))
        assert v1 >= stored
        assert v1 > 1.05 * stored

    def test_finite_bandwidth_is_worse(self):
        for atl in (-10.0, -40.0):
            bb = run_write(make_run(atl, atl / 5, 10.0, None, n=128))
            fb = run_write(make_run(atl, atl / 5, 10.0, 10.0, n=128))
            assert mandel_spectrum(fb, "T_I").values[0] > mandel_spectrum(bb, "T_I").values[0]


class TestFidelity:
    def test_perfect_copy(self):
        sq = SqueezedInput.from_antisqueezing(10.0)
        assert quantum_fidelity(sq, (sq.xi1, sq.xi3)) == pytest.approx(1.0)

    def test_vacuum_output(self):
        sq = SqueezedInput.from_antisqueezing(10.0)
        assert quantum_fidelity(sq, (0.0, 0.0)) == pytest.approx(2 / np.sqrt(1.1 * 11.0))

    def test_classical_scalar_and_vector(self):
        sq = SqueezedInput.from_antisqueezing(10.0, tau_c=0.01)
        F, ok = classical_benchmark(sq, 1.0, 20)
        assert F == pytest.approx(1 / np.sqrt(1 + (5 * np.pi / 20) ** 2))
        assert ok
        Fv, okv = classical_benchmark(sq, 1.0, [1, 20])
        assert not okv[0] and okv[1]

    @pytest.mark.parametrize("x3,F,Ns", [(4.0, 0.8467, (7, 10)), (10.0, 0.8138, (16, 22)), (25.0, 0.7674, (40, 47))])
    def test_best_classical_frozen(self, x3, F, Ns):
        sq = SqueezedInput.from_antisqueezing(x3, tau_c=0.01)
        bF, bN = best_classical(sq, 1.0)
        assert bF == pytest.approx(F, abs=1e-4)
        assert bN == Ns[1]
        _, ok = classical_benchmark(sq, 1.0, np.arange(1, 100))
        assert np.flatnonzero(ok)[[0, -1]].tolist() == [Ns[0] - 1, Ns[1] - 1]

    def test_no_admissible_for_strong_antisqueezing(self):
        for x3 in (100.0, 1e3, 1e4):
            assert best_classical(SqueezedInput.from_antisqueezing(x3, tau_c=0.01), 1.0) == (None, None)

    def test_report_kinds(self):
        run = make_run(-10.0, -2.0, 10.0, 100.0, n=64)
        post = run_write(run)
        rep = fidelity_report(run, post, "T")
        assert rep.classical_constraint_ok and rep.classical_N == 22
        assert rep.quantum_F > rep.classical_F
        d = rep.as_dict()
        assert set(d) >= {"quantum_F", "classical_F", "mode_variance_xi1"}
        with pytest.raises(ValueError):
            fidelity_report(run, post, "S")
