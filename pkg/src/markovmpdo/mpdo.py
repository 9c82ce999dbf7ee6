"""Markovian matrix product density operators.

A chain state is specified by a single-site initial state and a list of
site-growing channels; channel ``i`` maps site ``i`` to sites ``(i, i+1)``.
The module computes the running and final marginals, the per-site trace-norm
defects ``eps_i``, the local entropy estimate with its rigorous error bound,
exact windowed marginals, energies, and the certified free-energy upper
bound. Everything is dense and exact up to floating point; the only caps
are the desk-scale window/contraction limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as ch
from . import spectra as sp
from .config import DENSE_CAP, TOL_CPTP, WINDOW_CAP
from .errors import NumericError, ResourceLimitError, UsageError

__all__ = [
    "MarkovianMpdo",
    "MarkovReport",
    "single_site_marginals",
    "pair_marginals",
    "markov_epsilons",
    "entropy_estimate",
    "window_marginal",
    "energy",
    "free_energy_upper_bound",
    "contract",
    "entropy_error_bound",
]


class MarkovianMpdo:
    """Initial single-site state plus a chain of site-growing channels.

    ``channels[k]`` (0-based) extends site ``k+1`` (1-based) to sites
    ``(k+1, k+2)``: its input dimension must equal ``site_dims[k]`` and its
    output dims must be ``(site_dims[k], site_dims[k+1])``, where the second
    output dimension defines the new site. With ``validate=True`` the
    initial state and every channel are checked (CPTP at ``tol_cptp``);
    parsed, not-yet-verified witnesses use ``validate=False``.
    """

    __slots__ = ("n", "site_dims", "initial", "channels")

    def __init__(self, initial: sp.DensityMatrix, channel_list: Sequence[ch.QuantumChannel],
                 *, validate: bool = True, tol_cptp: float = TOL_CPTP):
        if initial.n_subsystems != 1:
            initial = initial.reshaped((initial.dim,))
        dims = [initial.dim]
        for k, phi in enumerate(channel_list):
            site = k + 1
            if len(phi.out_dims) != 2:
                raise UsageError(f"channel at site {site} must have exactly 2 output subsystems")
            if phi.d_in != dims[-1]:
                raise UsageError(
                    f"channel at site {site} has d_in={phi.d_in} but site dimension is {dims[-1]}")
            if phi.out_dims[0] != phi.d_in:
                raise UsageError(
                    f"channel at site {site} must keep its input site: out_dims[0]={phi.out_dims[0]} "
                    f"!= d_in={phi.d_in}")
            dims.append(phi.out_dims[1])
        if validate:
            sp.DensityMatrix(initial.matrix, initial.dims)
            for k, phi in enumerate(channel_list):
                ch.channel_from_choi(phi.choi, phi.d_in, phi.out_dims, tol_cptp)
        self.n = len(dims)
        self.site_dims = tuple(dims)
        self.initial = initial
        self.channels = tuple(channel_list)

    @property
    def total_dim(self) -> int:
        return math.prod(self.site_dims)

    @property
    def d_max(self) -> int:
        return max(self.site_dims)

    def suffix(self, start: int) -> "MarkovianMpdo":
        """The chain on sites ``start..n`` with the propagated state at
        ``start`` as its initial state."""
        if not 1 <= start <= self.n:
            raise UsageError(f"start {start} out of range 1..{self.n}")
        init = single_site_marginals(self)[start - 1]
        return MarkovianMpdo(init, self.channels[start - 1:], validate=False)

    def __repr__(self):
        return f"MarkovianMpdo(n={self.n}, site_dims={self.site_dims})"


@dataclass(frozen=True)
class MarkovReport:
    """Per-site trace-norm defects and the entropy estimate they certify.

    ``epsilons`` holds ``eps_2 .. eps_{n-1}`` (empty for n <= 2). The bound
    field follows ``(n-2) * (4 eps ln d_max + 2 H_b(min(2 eps, 1)))`` with
    ``eps = epsilon_max``; it certifies the estimate only when
    ``epsilon_max <= 1/2``.
    """

    epsilons: tuple[float, ...]
    epsilon_max: float
    entropy_estimate: float | None = None
    entropy_error_bound: float | None = None

    @property
    def certified(self) -> bool:
        return self.epsilon_max <= 0.5


def entropy_error_bound(n: int, d_max: int, eps: float) -> float:
    """The stability bound (n-2)(4 eps ln d_max + 2 H_b(2 eps)), H_b clamped."""
    if n <= 2:
        return 0.0
    return (n - 2) * (4.0 * eps * math.log(d_max)
                      + 2.0 * sp.binary_entropy(min(2.0 * eps, 1.0)))


def single_site_marginals(m: MarkovianMpdo) -> list[sp.DensityMatrix]:
    """Running marginals: the state of site i just before channel i fires."""
    out = [m.initial]
    cur = m.initial
    for phi in m.channels:
        step = ch.compose_then_trace(phi, (1,), tol_cptp=1e-6)
        cur = ch.apply(step, cur, 1)
        out.append(cur)
    return out


def _forward(m: MarkovianMpdo):
    """One pass producing the running marginals, the pre-update pair states
    sigma_i = Phi_{i-1}(rho~^{i-1}), and the final two-site marginals."""
    tildes = single_site_marginals(m)
    sigmas = []
    pairs = []
    for i in range(2, m.n + 1):
        sigma = ch.apply(m.channels[i - 2], tildes[i - 2], 1)
        sigmas.append(sigma)
        if i < m.n:
            grown = ch.apply(m.channels[i - 1], sigma, 2)
            pairs.append(sp.partial_trace(grown, (1, 2), psd_tol=1e-8))
        else:
            pairs.append(sigma)
    return tildes, sigmas, pairs


def pair_marginals(m: MarkovianMpdo) -> list[sp.DensityMatrix]:
    """The final state's two-site marginals rho^{i-1,i} for i = 2..n."""
    if m.n < 2:
        raise UsageError("pair_marginals requires n >= 2")
    return _forward(m)[2]


def markov_epsilons(m: MarkovianMpdo) -> MarkovReport:
    """Trace-norm defects eps_i = ||sigma_i - rho^{i-1,i}||_1, i = 2..n-1."""
    if m.n <= 2:
        return MarkovReport(epsilons=(), epsilon_max=0.0)
    _, sigmas, pairs = _forward(m)
    eps = tuple(sp.trace_norm(sigmas[k].matrix - pairs[k].matrix)
                for k in range(m.n - 2))
    return MarkovReport(epsilons=eps, epsilon_max=max(eps))


def entropy_estimate(m: MarkovianMpdo) -> MarkovReport:
    """Local entropy decomposition with its certified error bound.

    estimate = sum_{i=2..n} S(rho^{i-1,i}) - sum_{i=2..n-1} S(rho^{i}),
    where the single-site marginals are those of the final state. For
    n = 1 (2) the estimate is the exact entropy of the initial (pair)
    state and the bound is 0.
    """
    if m.n == 1:
        return MarkovReport(epsilons=(), epsilon_max=0.0,
                            entropy_estimate=sp.von_neumann_entropy(m.initial),
                            entropy_error_bound=0.0)
    _, sigmas, pairs = _forward(m)
    est = sum(sp.von_neumann_entropy(p) for p in pairs)
    est -= sum(sp.von_neumann_entropy(sp.partial_trace(pairs[k], (2,), psd_tol=1e-8))
               for k in range(m.n - 2))
    if m.n == 2:
        return MarkovReport(epsilons=(), epsilon_max=0.0,
                            entropy_estimate=float(est), entropy_error_bound=0.0)
    eps = tuple(sp.trace_norm(sigmas[k].matrix - pairs[k].matrix)
                for k in range(m.n - 2))
    eps_max = max(eps)
    return MarkovReport(epsilons=eps, epsilon_max=eps_max,
                        entropy_estimate=float(est),
                        entropy_error_bound=entropy_error_bound(m.n, m.d_max, eps_max))


def window_marginal(m: MarkovianMpdo, lo: int, hi: int,
                    window_cap: int = WINDOW_CAP) -> sp.DensityMatrix:
    """Exact final-state marginal on the contiguous sites ``lo..hi``."""
    return _window(m, single_site_marginals(m), lo, hi, window_cap)


def _window(m: MarkovianMpdo, tildes, lo: int, hi: int, window_cap: int) -> sp.DensityMatrix:
    if not 1 <= lo <= hi <= m.n:
        raise UsageError(f"window [{lo}..{hi}] out of range for n={m.n}")
    width = hi - lo + 1
    if width > window_cap:
        raise ResourceLimitError(f"window width {width} exceeds cap {window_cap}")
    state = tildes[lo - 1]
    for k in range(lo, hi):
        state = ch.apply(m.channels[k - 1], state, k - lo + 1)
    if hi < m.n:
        state = ch.apply(m.channels[hi - 1], state, width)
        state = sp.partial_trace(state, tuple(range(1, width + 1)), psd_tol=1e-8)
    return state


def energy(m: MarkovianMpdo, hamiltonian) -> float:
    """Energy ``sum_terms Tr(window_marginal * term)`` of the final state."""
    if tuple(hamiltonian.site_dims) != m.site_dims:
        raise UsageError(
            f"Hamiltonian site dims {tuple(hamiltonian.site_dims)} do not match "
            f"MPDO site dims {m.site_dims}")
    tildes = single_site_marginals(m)
    cache: dict[tuple[int, int], sp.DensityMatrix] = {}
    total = 0.0 + 0.0j
    for start, width, op in hamiltonian.supports():
        key = (start, start + width - 1)
        if key not in cache:
            cache[key] = _window(m, tildes, key[0], key[1], WINDOW_CAP)
        total += np.einsum("ij,ji->", cache[key].matrix, op)
    if abs(total.imag) > 1e-9:
        raise NumericError(f"energy has imaginary residue {total.imag:.3e}")
    return float(total.real)


def free_energy_upper_bound(m: MarkovianMpdo, hamiltonian, temperature: float
                            ) -> tuple[float, MarkovReport]:
    """Certified variational upper bound on the minimum free energy.

    value = energy - T * entropy_estimate + T * entropy_error_bound. When
    ``epsilon_max > 1/2`` the decomposition is uncertified and the bound is
    reported as +inf (no finite claim is made).
    """
    temperature = float(temperature)
    if temperature <= 0.0:
        raise UsageError(f"temperature must be positive, got {temperature}")
    report = entropy_estimate(m)
    if not report.certified:
        return math.inf, report
    e = energy(m, hamiltonian)
    value = e - temperature * report.entropy_estimate \
        + temperature * report.entropy_error_bound
    return float(value), report


def contract(m: MarkovianMpdo, dense_cap: int = DENSE_CAP) -> sp.DensityMatrix:
    """Dense construction of the full chain state (oracle-grade)."""
    if m.total_dim > dense_cap:
        raise ResourceLimitError(
            f"total dimension {m.total_dim} exceeds dense cap {dense_cap}")
    state = m.initial
    for k, phi in enumerate(m.channels):
        state = ch.apply(phi, state, k + 1)
    return state
