"""Desk-scale 1D spin-chain physics.

Local Hamiltonians with contiguous-support terms, exact Gibbs states and
free energies by dense diagonalization, conditional-mutual-information
decay scans, Petz recovery channels, and witness construction by blocking
the chain and recovering each blocked pair marginal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channels as ch
from . import mpdo as mp
from . import spectra as sp
from .config import DENSE_CAP, EIG_FLOOR, TOL_CPTP, TOL_HERM
from .errors import (
    InvalidChannelError,
    NumericError,
    ResourceLimitError,
    UsageError,
)

__all__ = [
    "LocalHamiltonian",
    "FreeEnergyInstance",
    "DecayScan",
    "BlockingPlan",
    "Lemma2Result",
    "RecoveryDiagnostic",
    "transverse_field_ising",
    "gibbs_state",
    "free_energy",
    "cmi_decay_scan",
    "petz_recovery",
    "build_witness",
    "block_hamiltonian",
    "group_sites",
    "lemma2_check",
    "recovery_diagnostic",
]


class LocalHamiltonian:
    """Qudit chain Hamiltonian with Hermitian terms on contiguous windows.

    ``terms`` is a list of ``(start, op)`` pairs with 1-based ``start``; the
    window width is inferred from the operator's side (smallest run of sites
    whose dimension product matches). Term operators with norm above 1 are
    legal but trigger a warning, since the certification bounds are stated
    for normalized terms.
    """

    __slots__ = ("site_dims", "_terms")

    def __init__(self, site_dims: Sequence[int], terms: Sequence[tuple[int, np.ndarray]]):
        self.site_dims = tuple(int(d) for d in site_dims)
        if not self.site_dims or any(d < 1 for d in self.site_dims):
            raise UsageError(f"bad site dimensions {site_dims}")
        parsed = []
        for idx, (start, op) in enumerate(terms):
            start = int(start)
            op = sp.hermitian_part(op, TOL_HERM, f"term {idx}")
            width = self._infer_width(start, op.shape[0], idx)
            if sp.operator_norm(op) > 1.0 + 1e-9:
                warnings.warn(
                    f"term {idx} has operator norm > 1; certification bounds assume "
                    f"normalized terms", stacklevel=2)
            parsed.append((start, width, op))
        self._terms = tuple(parsed)

    def _infer_width(self, start: int, side: int, idx: int) -> int:
        n = len(self.site_dims)
        if not 1 <= start <= n:
            raise UsageError(f"term {idx} start {start} out of range 1..{n}")
        prod = 1
        for w, d in enumerate(self.site_dims[start - 1:], start=1):
            prod *= d
            if prod == side:
                return w
            if prod > side:
                break
        raise UsageError(
            f"term {idx} with side {side} does not fit a contiguous window at site {start}")

    def supports(self):
        """Yield ``(start, width, op)`` triples."""
        return iter(self._terms)

    @property
    def n(self) -> int:
        return len(self.site_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.site_dims)

    def dense(self) -> np.ndarray:
        """Full matrix, embedding each term with identity padding."""
        h = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        for start, width, op in self._terms:
            d_l = math.prod(self.site_dims[:start - 1])
            d_r = math.prod(self.site_dims[start - 1 + width:])
            h += np.kron(np.kron(np.eye(d_l), op), np.eye(d_r))
        return h


@dataclass(frozen=True)
class FreeEnergyInstance:
    """A promise instance: Hamiltonian, temperature, and thresholds."""

    hamiltonian: LocalHamiltonian
    temperature: float
    alpha: float
    beta_threshold: float

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise UsageError(f"temperature must be positive, got {self.temperature}")
        if not self.beta_threshold - self.alpha > 0.0:
            raise UsageError(
                f"threshold gap must be positive, got alpha={self.alpha}, "
                f"beta={self.beta_threshold}")


@dataclass(frozen=True)
class DecayScan:
    """CMI values of a Gibbs state as the conditioning width grows."""

    a_pos: int
    rows: tuple[tuple[int, float], ...]
    fit: tuple[float, float] | None

    def to_csv(self) -> str:
        lines = ["ell,delta"]
        lines += [f"{ell},{delta!r}" for ell, delta in self.rows]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BlockingPlan:
    """Coarse-graining of a chain into contiguous blocks."""

    block_length: int
    m: int
    blocked_dims: tuple[int, ...]


@dataclass(frozen=True)
class Lemma2Result:
    """Local-certificate check: CMI of the extended state against the bound
    built from the bipartite defect epsilon. ``ok`` is None when the
    hypothesis epsilon <= 1/2 fails (no claim is made)."""

    epsilon: float
    lhs: float
    rhs: float | None
    ok: bool | None


@dataclass(frozen=True)
class RecoveryDiagnostic:
    """Side-by-side recovery error and CMI for a tripartition; the
    square-root relation between them is reported, never asserted."""

    trace_dist: float
    cmi_value: float


def transverse_field_ising(n: int, coupling: float = 1.0, field: float = 1.0) -> LocalHamiltonian:
    """TFIM chain: nearest-neighbor ZZ plus transverse X, open boundaries."""
    if n < 2:
        raise UsageError(f"need at least 2 sites, got {n}")
    z = np.diag([1.0, -1.0]).astype(np.complex128)
    x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    terms = [(i, -coupling * np.kron(z, z)) for i in range(1, n)]
    terms += [(i, -field * x) for i in range(1, n + 1)]
    return LocalHamiltonian((2,) * n, terms)


def gibbs_state(hamiltonian: LocalHamiltonian, beta: float,
                dense_cap: int = DENSE_CAP) -> sp.DensityMatrix:
    """Exact Gibbs state ``exp(-beta H) / Z`` by dense diagonalization."""
    beta = float(beta)
    if beta < 0.0:
        raise UsageError(f"inverse temperature must be >= 0, got {beta}")
    if hamiltonian.total_dim > dense_cap:
        raise ResourceLimitError(
            f"total dimension {hamiltonian.total_dim} exceeds dense cap {dense_cap}")
    w, v = sp.eigh_or_raise(sp.hermitian_part(hamiltonian.dense(), 1e-9, "Hamiltonian"))
    x = -beta * w
    x -= x.max()
    p = np.exp(x)
    p /= p.sum()
    rho = (v * p) @ v.conj().T
    return sp.DensityMatrix(rho, hamiltonian.site_dims)


def free_energy(rho: sp.DensityMatrix, hamiltonian: LocalHamiltonian,
                temperature: float) -> float:
    """F = Tr(rho H) - T S(rho)."""
    temperature = float(temperature)
    if temperature <= 0.0:
        raise UsageError(f"temperature must be positive, got {temperature}")
    if rho.dims != hamiltonian.site_dims:
        raise UsageError(
            f"state dims {rho.dims} do not match Hamiltonian dims {hamiltonian.site_dims}")
    e = np.einsum("ij,ji->", rho.matrix, hamiltonian.dense())
    if abs(e.imag) > 1e-9:
        raise NumericError(f"energy has imaginary residue {e.imag:.3e}")
    return float(e.real) - temperature * sp.von_neumann_entropy(rho)


def cmi_decay_scan(hamiltonian: LocalHamiltonian, beta: float, a_pos: int,
                   l_max: int, dense_cap: int = DENSE_CAP) -> DecayScan:
    """CMI of the Gibbs state for A = 1..a_pos, B the next ell sites, C the
    rest, for ell = 1..l_max; fits ln(delta) against ell when possible."""
    n = hamiltonian.n
    a_pos = int(a_pos)
    l_max = int(l_max)
    if not (1 <= a_pos and a_pos + l_max < n):
        raise UsageError(
            f"need 1 <= a_pos and a_pos + l_max < n, got a_pos={a_pos}, "
            f"l_max={l_max}, n={n}")
    rho = gibbs_state(hamiltonian, beta, dense_cap)
    rows = []
    for ell in range(1, l_max + 1):
        a_set = tuple(range(1, a_pos + 1))
        b_set = tuple(range(a_pos + 1, a_pos + ell + 1))
        c_set = tuple(range(a_pos + ell + 1, n + 1))
        rows.append((ell, sp.cmi(rho, (a_set, b_set, c_set))))
    usable = [(ell, d) for ell, d in rows if d > 1e-12]
    fit = None
    if len(usable) >= 2:
        ells = np.array([e for e, _ in usable], dtype=float)
        logs = np.log([d for _, d in usable])
        slope, intercept = np.polyfit(ells, logs, 1)
        fit = (float(slope), float(intercept))
    return DecayScan(a_pos=a_pos, rows=tuple(rows), fit=fit)


def petz_recovery(rho_bc: sp.DensityMatrix, tol_cptp: float = TOL_CPTP) -> ch.QuantumChannel:
    """Petz transpose channel ``B -> B (x) C`` of a bipartite state.

    Phi(X) = rho_BC^{1/2} (rho_B^{-1/2} X rho_B^{-1/2} (x) I_C) rho_BC^{1/2},
    completed on the kernel of rho_B by trace-and-replace with rho_BC. The
    fixed point Phi(rho_B) = rho_BC holds exactly. Near-singular rho_B can
    push the construction past the CPTP tolerance, which is reported as a
    numeric error.
    """
    if rho_bc.n_subsystems != 2:
        raise UsageError(f"expected a bipartite state, got {rho_bc.n_subsystems} subsystems")
    d_b, d_c = rho_bc.dims
    rho_b = sp.partial_trace(rho_bc, (1,)).matrix
    wb, vb = sp.eigh_or_raise(rho_b)
    support = wb > EIG_FLOOR
    inv_sqrt = (vb * np.where(support, 1.0 / np.sqrt(np.abs(wb)), 0.0)) @ vb.conj().T
    kernel_proj = (vb * (~support)) @ vb.conj().T
    wbc, vbc = sp.eigh_or_raise(rho_bc.matrix)
    sqrt_bc = (vbc * np.sqrt(np.clip(wbc, 0.0, None))) @ vbc.conj().T
    k_op = sqrt_bc @ np.kron(inv_sqrt, np.eye(d_c))
    side = d_b * d_c
    choi = np.zeros((d_b * side, d_b * side), dtype=np.complex128)
    for i in range(d_b):
        k_i = k_op[:, i * d_c:(i + 1) * d_c]
        for j in range(d_b):
            k_j = k_op[:, j * d_c:(j + 1) * d_c]
            block = k_i @ k_j.conj().T + kernel_proj[j, i] * rho_bc.matrix
            choi[i * side:(i + 1) * side, j * side:(j + 1) * side] = block
    try:
        return ch.channel_from_choi(choi, d_b, (d_b, d_c), tol_cptp)
    except InvalidChannelError as exc:
        raise NumericError(
            f"Petz channel failed CPTP validation (CP defect {exc.cp_defect:.3e}, "
            f"TP defect {exc.tp_defect:.3e}); the B marginal is likely near-singular"
        ) from exc


def _blocks(n: int, block_length: int) -> list[tuple[int, int]]:
    if block_length < 1:
        raise UsageError(f"block length must be >= 1, got {block_length}")
    m = math.ceil(n / block_length)
    return [((k * block_length) + 1, min((k + 1) * block_length, n)) for k in range(m)]


def build_witness(hamiltonian: LocalHamiltonian, beta: float, block_length: int,
                  dense_cap: int = DENSE_CAP) -> tuple[mp.MarkovianMpdo, BlockingPlan]:
    """Markovian MPDO witness for the Gibbs state, by blocking.

    The chain is coarse-grained into blocks of ``block_length`` sites (the
    last block keeps the remainder), the exact blocked Gibbs one- and
    two-block marginals are computed, and each channel is the Petz recovery
    of the corresponding pair marginal. By the Petz fixed point the witness
    reproduces every blocked single-site marginal.
    """
    n = hamiltonian.n
    blocks = _blocks(n, int(block_length))
    blocked_dims = tuple(math.prod(hamiltonian.site_dims[s - 1:e]) for s, e in blocks)
    plan = BlockingPlan(block_length=int(block_length), m=len(blocks),
                        blocked_dims=blocked_dims)
    rho = gibbs_state(hamiltonian, beta, dense_cap)
    s0, e0 = blocks[0]
    initial = sp.partial_trace(rho, tuple(range(s0, e0 + 1))).reshaped((blocked_dims[0],))
    channel_list = []
    for k in range(len(blocks) - 1):
        s_a, e_a = blocks[k]
        s_b, e_b = blocks[k + 1]
        pair = sp.partial_trace(rho, tuple(range(s_a, e_b + 1)))
        pair = pair.reshaped((blocked_dims[k], blocked_dims[k + 1]))
        channel_list.append(petz_recovery(pair))
    return mp.MarkovianMpdo(initial, channel_list), plan


def group_sites(physical_dims: Sequence[int], blocked_dims: Sequence[int]
                ) -> list[tuple[int, int]]:
    """Greedy grouping of physical sites into blocks matching ``blocked_dims``.

    Returns 1-based ``(start, end)`` ranges; raises if no contiguous grouping
    reproduces the blocked dimensions.
    """
    physical_dims = tuple(int(d) for d in physical_dims)
    ranges = []
    pos = 0
    for b, target in enumerate(blocked_dims):
        start = pos
        prod = 1
        while pos < len(physical_dims):
            prod *= physical_dims[pos]
            pos += 1
            if prod == target:
                break
            if prod > target:
                raise UsageError(
                    f"block {b + 1} dimension {target} is not a product of consecutive "
                    f"physical dimensions starting at site {start + 1}")
        else:
            raise UsageError(
                f"ran out of physical sites while matching block {b + 1} "
                f"dimension {target}")
        if prod != target:
            raise UsageError(
                f"block {b + 1} dimension {target} cannot be matched at site {start + 1}")
        ranges.append((start + 1, pos))
    if pos != len(physical_dims):
        raise UsageError("physical chain is longer than the blocked chain covers")
    return ranges


def block_hamiltonian(hamiltonian: LocalHamiltonian, blocked_dims: Sequence[int]
                      ) -> LocalHamiltonian:
    """Rewrite a physical-chain Hamiltonian over a blocked chain.

    Each term is padded with identities inside its boundary blocks; the
    composite-index convention makes the padded operator act identically on
    the blocked Hilbert space.
    """
    ranges = group_sites(hamiltonian.site_dims, blocked_dims)
    block_of = {}
    for b, (s, e) in enumerate(ranges):
        for site in range(s, e + 1):
            block_of[site] = b
    new_terms = []
    for start, width, op in hamiltonian.supports():
        end = start + width - 1
        b1 = block_of[start]
        b2 = block_of[end]
        pad_l = math.prod(hamiltonian.site_dims[ranges[b1][0] - 1:start - 1])
        pad_r = math.prod(hamiltonian.site_dims[end:ranges[b2][1]])
        padded = np.kron(np.kron(np.eye(pad_l), op), np.eye(pad_r))
        new_terms.append((b1 + 1, padded))
    return LocalHamiltonian(tuple(blocked_dims), new_terms)


def lemma2_check(sigma_ab: sp.DensityMatrix, phi: ch.QuantumChannel,
                 slack: float = 1e-8) -> Lemma2Result:
    """Numerically test the local certificate inequality.

    Extends ``sigma_ab`` with ``phi`` acting on B, measures the bipartite
    defect epsilon against the extension's AB marginal, and compares the
    dense CMI against ``4 eps ln d_A + 2 H_b(2 eps)``. If epsilon exceeds
    1/2 the hypothesis fails and no claim is made (``ok=None``).
    """
    if sigma_ab.n_subsystems != 2:
        raise UsageError("sigma_ab must be bipartite (A, B)")
    d_a, d_b = sigma_ab.dims
    if phi.d_in != d_b or len(phi.out_dims) != 2 or phi.out_dims[0] != d_b:
        raise UsageError(
            f"channel must map B -> B (x) C with d_B={d_b}, got d_in={phi.d_in}, "
            f"out_dims={phi.out_dims}")
    rho_abc = ch.apply(phi, sigma_ab, 2)
    rho_ab = sp.partial_trace(rho_abc, (1, 2), psd_tol=1e-8)
    eps = sp.trace_norm(sigma_ab.matrix - rho_ab.matrix)
    lhs = sp.cmi(rho_abc, ((1,), (2,), (3,)))
    if eps > 0.5:
        return Lemma2Result(epsilon=eps, lhs=lhs, rhs=None, ok=None)
    rhs = 4.0 * eps * math.log(d_a) + 2.0 * sp.binary_entropy(2.0 * eps)
    return Lemma2Result(epsilon=eps, lhs=lhs, rhs=rhs, ok=bool(lhs <= rhs + slack))


def recovery_diagnostic(rho: sp.DensityMatrix,
                        split: tuple[Sequence[int], Sequence[int], Sequence[int]]
                        ) -> RecoveryDiagnostic:
    """Recovery error of the Petz channel against the CMI of the split.

    Returns ``||rho^{ABC} - (I_A (x) Phi)(rho^{AB})||_1`` and ``I(A:C|B)``
    side by side. The Fawzi-Renner-type relation between them holds for a
    rotated recovery map; for the plain Petz channel used here it is only
    reported, never asserted.
    """
    a_set, b_set, c_set = (tuple(int(i) for i in s) for s in split)
    if not b_set or not c_set:
        raise UsageError("B and C must be nonempty")
    ordered = a_set + b_set + c_set
    if list(ordered) != sorted(ordered):
        raise UsageError("split groups must be ascending contiguous blocks")
    cmi_value = sp.cmi(rho, (a_set, b_set, c_set))
    sub = sp.partial_trace(rho, ordered, psd_tol=1e-8)
    d_a = math.prod(sub.dims[:len(a_set)])
    d_b = math.prod(sub.dims[len(a_set):len(a_set) + len(b_set)])
    d_c = math.prod(sub.dims[len(a_set) + len(b_set):])
    flat_dims = ((d_a, d_b, d_c) if a_set else (d_b, d_c))
    target = sub.reshaped(flat_dims)
    keep_ab = tuple(range(1, len(a_set) + len(b_set) + 1))
    rho_ab = sp.partial_trace(sub, keep_ab, psd_tol=1e-8)
    rho_ab = rho_ab.reshaped((d_a, d_b) if a_set else (d_b,))
    rho_bc = sp.partial_trace(sub, tuple(range(len(a_set) + 1, sub.n_subsystems + 1)),
                              psd_tol=1e-8).reshaped((d_b, d_c))
    phi = petz_recovery(rho_bc)
    recovered = ch.apply(phi, rho_ab, 2 if a_set else 1)
    trace_dist = sp.trace_norm(target.matrix - recovered.matrix)
    return RecoveryDiagnostic(trace_dist=trace_dist, cmi_value=cmi_value)
