"""Seeded generators and independent brute-force oracles.

Everything here is a deterministic function of its seed and is used to
cross-check the estimator modules; nothing imports the estimator internals
beyond the public chain type. The classical-chain and dense-decomposition
oracles are the reference values the acceptance suite trusts.
"""

from __future__ import annotations

import math

import numpy as np

from . import channels as ch
from . import mpdo as mp
from . import spectra as sp
from . import spinchain as sc
from .config import DENSE_CAP
from .errors import ResourceLimitError, UsageError

__all__ = [
    "random_density_matrix",
    "random_channel",
    "random_classical_chain",
    "classical_markov_mpdo",
    "classical_chain_entropy",
    "product_chain",
    "perturbed_petz_chain",
    "entropy_decomposition_oracle",
    "selftest",
]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_density_matrix(dims, seed) -> sp.DensityMatrix:
    """Hilbert-Schmidt-style sample: G G^dag / Tr with G complex Gaussian."""
    dims = tuple(int(d) for d in dims)
    total = math.prod(dims)
    if total > DENSE_CAP:
        raise ResourceLimitError(f"dimension {total} exceeds dense cap {DENSE_CAP}")
    rng = _rng(seed)
    g = rng.standard_normal((total, total)) + 1j * rng.standard_normal((total, total))
    a = g @ g.conj().T
    return sp.DensityMatrix(a / np.trace(a).real, dims)


def random_channel(d_in: int, out_dims, seed, env_dim: int | None = None) -> ch.QuantumChannel:
    """Random CPTP map from a seeded Gaussian isometry with a traced environment.

    ``env_dim=1`` with matching dimensions yields a random unitary channel.
    """
    out_dims = tuple(int(d) for d in out_dims)
    d_out = math.prod(out_dims)
    env = d_out if env_dim is None else int(env_dim)
    if d_out * env < d_in:
        raise UsageError(
            f"no isometry into dimension {d_out}*{env} from dimension {d_in}")
    rng = _rng(seed)
    g = rng.standard_normal((d_out * env, d_in)) + 1j * rng.standard_normal((d_out * env, d_in))
    v, _ = np.linalg.qr(g)
    vt = v.reshape(d_out, env, d_in)
    c4 = np.einsum("aei,bej->iajb", vt, vt.conj())
    choi = c4.reshape(d_in * d_out, d_in * d_out)
    return ch.channel_from_choi(choi, d_in, out_dims, tol_cptp=1e-10)


def random_classical_chain(n: int, d: int, seed):
    """Seeded initial distribution and row-stochastic transition matrices."""
    rng = _rng(seed)
    p0 = rng.dirichlet(np.ones(d))
    transitions = [rng.dirichlet(np.ones(d), size=d) for _ in range(n - 1)]
    return p0, transitions


def classical_markov_mpdo(transitions, initial_distribution) -> mp.MarkovianMpdo:
    """Embed a classical Markov chain as a diagonal Markovian MPDO.

    Channel i pinches its input to the computational basis and appends the
    conditional distribution: |k><k| -> |k><k| (x) sum_j P_i(j|k) |j><j|.
    The resulting chain is an exact quantum Markov chain (all eps_i = 0 up
    to float).
    """
    p0 = np.asarray(initial_distribution, dtype=float)
    if p0.ndim != 1 or np.any(p0 < -1e-12) or abs(p0.sum() - 1.0) > 1e-10:
        raise UsageError("initial distribution must be a probability vector")
    dims = [p0.size]
    mats = []
    for t_idx, t in enumerate(transitions):
        t = np.asarray(t, dtype=float)
        if t.ndim != 2 or t.shape[0] != dims[-1]:
            raise UsageError(f"transition {t_idx} has shape {t.shape}, expected "
                             f"({dims[-1]}, *)")
        if np.any(t < -1e-12) or np.max(np.abs(t.sum(axis=1) - 1.0)) > 1e-10:
            raise UsageError(f"transition {t_idx} rows are not probability vectors")
        mats.append(t)
        dims.append(t.shape[1])
    initial = sp.DensityMatrix(np.diag(p0).astype(np.complex128), (dims[0],))
    channel_list = []
    for i, t in enumerate(mats):
        d_a, d_b = t.shape
        side = d_a * d_b
        choi = np.zeros((d_a * side, d_a * side), dtype=np.complex128)
        for k in range(d_a):
            for j in range(d_b):
                r = k * side + k * d_b + j
                choi[r, r] = t[k, j]
        channel_list.append(ch.channel_from_choi(choi, d_a, (d_a, d_b), tol_cptp=1e-12))
    return mp.MarkovianMpdo(initial, channel_list)


def classical_chain_entropy(initial_distribution, transitions) -> float:
    """Shannon entropy of the chain by the chain rule, in nats.

    H = H(p_1) + sum_i sum_k q_i(k) H(P_i(.|k)) with q_i the propagated
    marginals. Independent of the quantum estimator.
    """

    def h(p):
        p = np.asarray(p, dtype=float)
        p = p[p > 1e-15]
        return float(-np.sum(p * np.log(p)))

    q = np.asarray(initial_distribution, dtype=float)
    total = h(q)
    for t in transitions:
        t = np.asarray(t, dtype=float)
        total += float(sum(q[k] * h(t[k]) for k in range(t.shape[0])))
        q = q @ t
    return total


def product_chain(initial: sp.DensityMatrix, taus) -> mp.MarkovianMpdo:
    """Chain whose channel i is X -> X (x) tau_i (an exact product state)."""
    channel_list = []
    d = initial.dim
    for tau in taus:
        ident = ch.identity_channel(d)
        choi = np.kron(ident.choi, tau.matrix)
        channel_list.append(ch.channel_from_choi(choi, d, (d, tau.dim), tol_cptp=1e-12))
        d = tau.dim
    return mp.MarkovianMpdo(initial, channel_list)


def perturbed_petz_chain(n: int, d: int, seed, noise: float = 0.35) -> mp.MarkovianMpdo:
    """Random chain: Petz recoveries of random pair states, convexly mixed
    with random channel noise. The workhorse ensemble for the bound checks."""
    rng = _rng(seed)
    initial = random_density_matrix((d,), rng)
    channel_list = []
    for _ in range(n - 1):
        sigma = random_density_matrix((d, d), rng)
        petz = sc.petz_recovery(sigma)
        lam = float(rng.uniform(0.0, noise))
        noisy = random_channel(d, (d, d), rng)
        choi = (1.0 - lam) * petz.choi + lam * noisy.choi
        channel_list.append(ch.channel_from_choi(choi, d, (d, d)))
    return mp.MarkovianMpdo(initial, channel_list)


def entropy_decomposition_oracle(m: mp.MarkovianMpdo):
    """Dense reference for the entropy decomposition.

    Returns ``(exact, residuals)`` where ``exact = S(contract(m))`` and
    ``residuals[i-1] = |S(i..n) - S(i,i+1) - S(i+1..n) + S(i+1)|`` from
    dense marginals, for i = 1..n-2: the per-step quantities the recursion
    bounds. Their sum telescopes to ``estimate - exact``.
    """
    rho = mp.contract(m)
    n = m.n

    def ent(keep):
        return sp.von_neumann_entropy(sp.partial_trace(rho, keep, psd_tol=1e-8,
                                                       validate=False))

    exact = sp.von_neumann_entropy(rho)
    suffix = {i: ent(tuple(range(i, n + 1))) for i in range(1, n + 1)}
    residuals = []
    for i in range(1, n - 1):
        val = suffix[i] - ent((i, i + 1)) - suffix[i + 1] + ent((i + 1,))
        residuals.append(abs(val))
    return exact, residuals


# ---------------------------------------------------------------------------
# selftest: the oracle suite behind the CLI hook


def _check_seed_determinism():
    a = random_density_matrix((3, 2), 7).matrix
    b = random_density_matrix((3, 2), 7).matrix
    c = random_channel(2, (2, 2), 11).choi
    d = random_channel(2, (2, 2), 11).choi
    ok = a.tobytes() == b.tobytes() and c.tobytes() == d.tobytes()
    return ok, "identical seeds reproduce identical bytes"


def _check_random_states():
    worst = 0.0
    for seed in range(20):
        rho = random_density_matrix((4,), seed)
        worst = max(worst, abs(np.trace(rho.matrix).real - 1.0))
    return worst < 1e-12, f"trace defect {worst:.2e}"


def _check_random_channels():
    worst = 0.0
    for seed in range(20):
        phi = random_channel(3, (2, 3), seed)
        worst = max(worst, phi.cp_defect(), phi.tp_defect())
    return worst <= 1e-10, f"CPTP defect {worst:.2e}"


def _check_classical_chain():
    p0, ts = random_classical_chain(5, 3, 42)
    m = classical_markov_mpdo(ts, p0)
    report = mp.entropy_estimate(m)
    exact = classical_chain_entropy(p0, ts)
    rho = mp.contract(m)
    worst_cmi = max(
        sp.cmi(rho, (tuple(range(1, b)), (b,), tuple(range(b + 1, m.n + 1))))
        for b in range(2, m.n))
    ok = (report.epsilon_max <= 1e-9
          and abs(report.entropy_estimate - exact) <= 1e-8
          and worst_cmi <= 1e-8)
    return ok, (f"eps_max {report.epsilon_max:.2e}, estimator error "
                f"{abs(report.entropy_estimate - exact):.2e}, CMI {worst_cmi:.2e}")


def _check_product_chain():
    taus = [random_density_matrix((2,), s) for s in (1, 2, 3)]
    m = product_chain(random_density_matrix((2,), 0), taus)
    report = mp.entropy_estimate(m)
    exact = sp.von_neumann_entropy(mp.contract(m))
    ok = report.epsilon_max <= 1e-10 and abs(report.entropy_estimate - exact) <= 1e-8
    return ok, f"eps_max {report.epsilon_max:.2e}"


def _check_petz_fixed_point():
    worst = 0.0
    for seed in range(20):
        rho_bc = random_density_matrix((3, 3), seed)
        phi = sc.petz_recovery(rho_bc)
        rho_b = sp.partial_trace(rho_bc, (1,))
        out = ch.apply(phi, rho_b, 1)
        worst = max(worst, sp.trace_norm(out.matrix - rho_bc.matrix))
    return worst <= 1e-8, f"worst recovery defect {worst:.2e}"


def _check_lemma2():
    count = 0
    seed = 0
    while count < 20:
        seed += 1
        rng = np.random.default_rng(seed)
        sigma = random_density_matrix((2, 3), rng)
        tau = random_density_matrix((2,), rng)
        gentle = ch.channel_from_choi(
            np.kron(ch.identity_channel(3).choi, tau.matrix), 3, (3, 2), tol_cptp=1e-12)
        lam = float(rng.uniform(0.0, 0.6))
        noisy = random_channel(3, (3, 2), rng)
        phi = ch.channel_from_choi((1 - lam) * gentle.choi + lam * noisy.choi, 3, (3, 2))
        res = sc.lemma2_check(sigma, phi)
        if res.ok is None:
            continue
        count += 1
        if not res.ok:
            return False, f"violated at seed {seed}: lhs {res.lhs:.3e} > rhs {res.rhs:.3e}"
    return True, "20 trials satisfied the local-certificate bound"


def _check_entropy_bound():
    for seed in range(30):
        m = perturbed_petz_chain(4, 2, seed)
        report = mp.entropy_estimate(m)
        if report.epsilon_max > 0.5:
            continue
        exact, residuals = entropy_decomposition_oracle(m)
        if abs(report.entropy_estimate - exact) > report.entropy_error_bound + 1e-8:
            return False, f"bound violated at seed {seed}"
        telescoped = abs(sum(residuals) - (report.entropy_estimate - exact))
        if telescoped > 1e-8:
            return False, f"telescoping broke at seed {seed}: {telescoped:.2e}"
    return True, "bound and telescoping hold on the random ensemble"


def _check_rounding():
    worst_ratio = 0.0
    for d in (2, 3, 4):
        for seed in range(10):
            rho = random_density_matrix((d,), seed)
            for bits in (12, 20):
                rounded = ch.round_density_matrix(rho, bits)
                err = sp.trace_norm(rho.matrix - rounded.matrix)
                worst_ratio = max(worst_ratio, err / (5.0 * d * d * 2.0 ** -bits))
    return worst_ratio <= 1.0, f"worst error / bound ratio {worst_ratio:.3f}"


def _check_distance_ordering():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        phi = random_channel(3, (2, 2), rng)
        psi = random_channel(3, (2, 2), rng)
        sharp, loose = ch.channel_distance_bound(phi, psi)
        if sharp > loose + 1e-9:
            return False, f"ordering violated at seed {seed}"
    return True, "sharp <= loose on 20 random pairs"


_SELFTEST_CHECKS = [
    ("seed determinism", _check_seed_determinism),
    ("random states valid", _check_random_states),
    ("random channels CPTP", _check_random_channels),
    ("classical chain exact", _check_classical_chain),
    ("product chain exact", _check_product_chain),
    ("Petz fixed point", _check_petz_fixed_point),
    ("local certificate", _check_lemma2),
    ("entropy bound + telescoping", _check_entropy_bound),
    ("state rounding bound", _check_rounding),
    ("channel distance ordering", _check_distance_ordering),
]


def selftest(out=print) -> bool:
    """Run the oracle suite, print one line per check, return overall pass."""
    all_ok = True
    for name, check in _SELFTEST_CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # a crashed oracle is a failed oracle
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    out(f"selftest: {'all checks passed' if all_ok else 'FAILURES detected'}")
    return all_ok
