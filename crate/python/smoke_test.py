"""Quick check that the qgv extension imports and its main entry points agree
with values that are easy to verify by hand."""

import math

import qgv


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    u = qgv.Gate.builtin("u_a")
    s = qgv.Strategy(u)
    close(s.nu, 2 / 3, 1e-12)
    assert len(s.settings()) == 6
    assert len(s.distinct_bases()) == 3

    cnot = qgv.Strategy(qgv.Gate.builtin("cnot"))
    close(cnot.nu, 0.25, 1e-12)
    assert len(cnot.settings()) == 16

    # all trials pass: epsilon = (1 - delta^(1/N)) / nu
    eps = qgv.epsilon_at_confidence(231, 231, 0.01, s.nu)
    close(eps, (1 - 0.01 ** (1 / 231)) * 1.5, 1e-10)
    assert qgv.min_samples_perfect(0.03, 0.01, s.nu) == 231
    close(qgv.kl_divergence(0.9, 0.98), 0.0843017637371339, 1e-14)
    try:
        qgv.epsilon_at_confidence(20, 100, 0.01, s.nu)
    except qgv.NotCertifiableError:
        pass
    else:
        raise AssertionError("expected NotCertifiableError")
    r = qgv.certify_counts(20, 100, 0.01, s.nu)
    assert not r.certified and r.epsilon == 1.0

    dev = qgv.Channel.calibrated(u, 0.98)
    close(dev.fidelity(u), 0.98, 1e-12)
    close(s.pass_probability(dev), 1 - 0.02 * 4 / 3 / 2, 1e-12)
    n, m = qgv.run_qgv(s, dev, 20000, seed=1)
    p = s.pass_probability(dev)
    assert abs(m / n - p) <= 4 * math.sqrt(p * (1 - p) / n)
    assert qgv.run_qgv(s, dev, 500, seed=7, stream=3) == qgv.run_qgv(s, dev, 500, seed=7, stream=3)

    pts = qgv.campaign(s, qgv.Channel.unitary(u), [50, 100, 200], 4, seed=2)
    for pt in pts:
        close(pt.mean_epsilon, (1 - 0.01 ** (1 / pt.n)) * 1.5, 1e-9)

    counts = qgv.simulate_counts(dev, 5000, seed=3)
    assert counts.n_settings == 18 and counts.total_shots == 90000
    again = qgv.CountTable.from_csv(counts.to_csv())
    assert again.to_csv() == counts.to_csv()
    ideal = qgv.Channel.unitary(u).chi()
    chi = qgv.mle_reconstruct(counts)
    assert chi.tp_residual <= 1e-6 and chi.min_eigenvalue >= -1e-8
    close(chi.fidelity(ideal), 0.98, 0.01)
    lin = qgv.linear_inversion(counts)
    close(lin.fidelity(ideal), 0.98, 0.01)

    slope, _, _ = qgv.loglog_fit([(n, 3.0 * n ** -0.5) for n in (10, 20, 40, 80)])
    close(slope, -0.5, 1e-10)

    print("qgv smoke test: ok")


if __name__ == "__main__":
    main()
