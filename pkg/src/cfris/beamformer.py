"""Fractional-programming beamformer design with per-AP power constraints.

Implements the alternating closed-form updates (Lagrangian dual transform,
quadratic transform, trace matrices, minorized cross terms, bisected per-AP
multiplier) together with the MMSE initialization and the two comparison
baselines. All surrogate algebra is carried out in nats and converted to
bits only when reporting, so the restored-constant surrogate equals the true
sum-rate exactly at the auxiliary fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import fast_hpd_solve, hermitian_solve
from .metrics import sum_rate

_LN2 = np.log(2.0)

# Per-AP feasibility slack on ||Q_l||_F^2 <= P_l.
POWER_SLACK = 1e-6


@dataclass(frozen=True)
class BeamformerSet:
    """Per-user stacked beamformers V_k with per-AP block view Q_{l,k}."""

    v: tuple
    ap_antennas: int

    def __post_init__(self):
        n_t = self.v[0].shape[0]
        if n_t % self.ap_antennas != 0:
            raise ValidationError(
                f"stacked rows {n_t} not divisible by {self.ap_antennas} antennas per AP"
            )

    @property
    def num_users(self) -> int:
        return len(self.v)

    @property
    def num_aps(self) -> int:
        return self.v[0].shape[0] // self.ap_antennas

    def q(self, l: int, k: int) -> np.ndarray:
        na = self.ap_antennas
        return self.v[k][l * na : (l + 1) * na, :]

    def per_ap_power(self) -> np.ndarray:
        return np.array(
            [
                sum(np.linalg.norm(self.q(l, k)) ** 2 for k in range(self.num_users))
                for l in range(self.num_aps)
            ]
        )

    @classmethod
    def from_blocks(cls, q_blocks, ap_antennas: int) -> "BeamformerSet":
        """Assemble from q_blocks[l][k] (N_a x M each)."""
        num_aps = len(q_blocks)
        num_users = len(q_blocks[0])
        v = tuple(
            np.vstack([q_blocks[l][k] for l in range(num_aps)]) for k in range(num_users)
        )
        return cls(v=v, ap_antennas=ap_antennas)


def _row_block(a: np.ndarray, l: int, na: int) -> np.ndarray:
    return a[l * na : (l + 1) * na, :]


def _sub_block(b: np.ndarray, l: int, lp: int, na: int) -> np.ndarray:
    return b[l * na : (l + 1) * na, lp * na : (lp + 1) * na]


def update_Z(e_k: np.ndarray, v_k: np.ndarray, psi_k: np.ndarray) -> np.ndarray:
    """Matrix Lagrange multiplier Z_k = V^H E^H Psi^{-1} E V (Hermitian PSD)."""
    ev = e_k @ v_k
    z = ev.conj().T @ hermitian_solve(psi_k, ev)
    return 0.5 * (z + z.conj().T)


def update_Y(e_k: np.ndarray, v_k: np.ndarray, psi_k: np.ndarray) -> np.ndarray:
    """Quadratic-transform auxiliary Y_k = (E V V^H E^H + Psi)^{-1} E V."""
    ev = e_k @ v_k
    return hermitian_solve(ev @ ev.conj().T + psi_k, ev)


def compute_A_B(e_k: np.ndarray, y_k: np.ndarray, z_k: np.ndarray):
    """Trace matrices A_k = E^H Y (I+Z) and B_k = E^H Y (I+Z) Y^H E."""
    m = y_k.shape[1]
    lead = e_k.conj().T @ y_k @ (np.eye(m) + z_k)
    a_k = lead
    b_k = lead @ y_k.conj().T @ e_k
    return a_k, 0.5 * (b_k + b_k.conj().T)


def compute_Omega(b_list, q_prev, l: int, k: int, na: int) -> np.ndarray:
    """Frozen cross-AP coupling term Omega_{l,k} from the previous sweep's
    blocks: sum_{k'} sum_{l' != l} ([B_k']_{l,l'} + [B_k']_{l',l}^H) Q_{l',k}."""
    num_aps = b_list[0].shape[0] // na
    m = q_prev[0][0].shape[1]
    omega = np.zeros((na, m), dtype=np.complex128)
    for b in b_list:
        for lp in range(num_aps):
            if lp == l:
                continue
            coupler = _sub_block(b, l, lp, na) + _sub_block(b, lp, l, na).conj().T
            omega = omega + coupler @ q_prev[lp][k]
    return omega


def solve_Q(a_k, b_list, omega_lk, zeta_l: float, l: int, na: int) -> np.ndarray:
    """Closed-form sub-beamformer
    Q_{l,k} = (zeta I + sum_k' [B_k']_{l,l})^{-1} ([A_k]_l - Omega_{l,k}/2)."""
    if zeta_l < 0:
        raise ValidationError(f"zeta must be nonnegative, got {zeta_l}")
    bsum = sum(_sub_block(b, l, l, na) for b in b_list)
    rhs = _row_block(a_k, l, na) - 0.5 * omega_lk
    lhs = zeta_l * np.eye(na) + bsum
    return hermitian_solve(0.5 * (lhs + lhs.conj().T), rhs)


def rate_gradient_Q(a_k, b_list, q_blocks, l: int, k: int, na: int) -> np.ndarray:
    """Gradient of the quadratic surrogate w.r.t. Q_{l,k}, laid out N_a x M
    so the first-order change is Re tr(G^H dQ). Vanishes at the closed-form
    solution with zeta = 0 and the cross terms frozen at q_blocks."""
    bsum = sum(_sub_block(b, l, l, na) for b in b_list)
    omega = compute_Omega(b_list, q_blocks, l, k, na)
    return 2.0 * (_row_block(a_k, l, na) - bsum @ q_blocks[l][k] - 0.5 * omega)


def _zeta_power_profile(targets, bsum):
    """Eigen-decomposed per-mode weights so the transmitted power at the
    l-th AP as a function of zeta is sum_i w_i / (zeta + lam_i)^2."""
    lam, u = np.linalg.eigh(0.5 * (bsum + bsum.conj().T))
    lam = np.maximum(lam, 0.0)
    w = np.zeros_like(lam)
    coeffs = []
    for t in targets:
        c = u.conj().T @ t
        coeffs.append(c)
        w = w + np.sum(np.abs(c) ** 2, axis=1)
    return lam, u, coeffs, w


def _power_at(zeta, lam, w):
    # lam/w are pre-filtered to excited modes, so the denominator is safe
    # for any zeta > -lam_min of interest
    return float(np.sum(w / (zeta + lam) ** 2))


def _q_at(zeta, lam, u, coeffs):
    denom = zeta + lam
    inv = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), 0.0)
    return [u @ (c * inv[:, None]) for c in coeffs]


def bisect_zeta(a_list, b_list, omega_row, p_l: float, l: int, na: int,
                tol_rel: float = 1e-8, max_iters: int = 100):
    """Per-AP multiplier search for the power constraint ||Q_l||_F^2 <= P_l.

    Returns (zeta_l, [Q_{l,k} for all k]). If the unconstrained solution is
    feasible, zeta = 0; otherwise zeta_max is doubled until feasible and the
    interval is bisected to |power - P_l| <= tol_rel * P_l.
    """
    if p_l <= 0:
        raise ValidationError(f"AP power budget must be positive, got {p_l}")
    bsum = sum(_sub_block(b, l, l, na) for b in b_list)
    targets = [
        _row_block(a_k, l, na) - 0.5 * omega for a_k, omega in zip(a_list, omega_row)
    ]
    lam, u, coeffs, w = _zeta_power_profile(targets, bsum)
    excited = w > 0
    lam_e, w_e = lam[excited], w[excited]
    if lam_e.size == 0:
        return 0.0, _q_at(0.0, lam, u, coeffs)
    # Infinite power at zeta = 0 when B-sum is rank deficient along an
    # excited mode; the doubling loop then starts from a feasible bracket.
    singular_at_zero = bool(lam_e.min() <= 1e-14 * max(lam.max(), 1.0))
    if not singular_at_zero and _power_at(0.0, lam_e, w_e) <= p_l:
        return 0.0, _q_at(0.0, lam, u, coeffs)
    hi = 1.0
    while _power_at(hi, lam_e, w_e) > p_l:
        hi *= 2.0
        if hi > 1e30:
            raise ValidationError("bisection failed to bracket the power constraint")
    lo = 0.0
    zeta = hi
    for _ in range(max_iters):
        zeta = 0.5 * (lo + hi)
        pw = _power_at(zeta, lam_e, w_e)
        if abs(pw - p_l) <= tol_rel * p_l:
            break
        if pw > p_l:
            lo = zeta
        else:
            hi = zeta
    return zeta, _q_at(zeta, lam, u, coeffs)


def mmse_init(e_list, p_ap, n0: float, na: int) -> BeamformerSet:
    """Regularized MMSE directions with exact per-AP power normalization."""
    k_users = len(e_list)
    n_t = e_list[0].shape[1]
    m = e_list[0].shape[0]
    p_max = float(np.sum(p_ap))
    gram = sum(e.conj().T @ e for e in e_list) + (k_users * m * n0 / p_max) * np.eye(n_t)
    v_raw = [hermitian_solve(0.5 * (gram + gram.conj().T), e.conj().T) for e in e_list]
    if all(np.linalg.norm(v) == 0 for v in v_raw):
        # zero channels: skip normalization, return the zero beamformer
        return BeamformerSet(v=tuple(v_raw), ap_antennas=na)
    num_aps = n_t // na
    v_out = [v.copy() for v in v_raw]
    for l in range(num_aps):
        pw = sum(np.linalg.norm(_row_block(v, l, na)) ** 2 for v in v_raw)
        if pw == 0:
            continue
        scale = np.sqrt(p_ap[l] / pw)
        for v in v_out:
            v[l * na : (l + 1) * na, :] *= scale
    return BeamformerSet(v=tuple(v_out), ap_antennas=na)


def baseline(e_list, p_ap, n0: float, na: int, mode: str) -> BeamformerSet:
    """Comparison baselines: per-AP-normalized MMSE and uniform power
    allocation over the MMSE directions."""
    if mode == "mmse_per_ap":
        return mmse_init(e_list, p_ap, n0, na)
    if mode != "uniform_pa":
        raise ValidationError(f"unknown baseline mode {mode!r}")
    mmse = mmse_init(e_list, p_ap, n0, na)
    k_users = len(e_list)
    num_aps = mmse.num_aps
    q_blocks = [[None] * k_users for _ in range(num_aps)]
    for l in range(num_aps):
        for k in range(k_users):
            q = mmse.q(l, k)
            nrm = np.linalg.norm(q)
            direction = q / nrm if nrm > 0 else q
            q_blocks[l][k] = np.sqrt(p_ap[l] / k_users) * direction
    return BeamformerSet.from_blocks(q_blocks, na)


def surrogate_value(e_list, v_list, z_list, y_list, n0: float) -> float:
    """Full quadratic-transform surrogate in bits, constants restored.

    With Z and Y at their closed-form updates this equals the true sum-rate.
    """
    total = 0.0
    m = y_list[0].shape[0]
    eye = np.eye(m)
    for k, (e, v, z, y) in enumerate(zip(e_list, v_list, z_list, y_list)):
        sign, logdet = np.linalg.slogdet(eye + z)
        s = float(np.real(logdet)) - float(np.real(np.trace(z)))
        s += 2.0 * float(np.real(np.trace((eye + z) @ v.conj().T @ e.conj().T @ y)))
        quad = n0 * (y @ (eye + z) @ y.conj().T)
        for vp in v_list:
            evp = e @ vp
            quad = quad + (evp @ evp.conj().T) @ y @ (eye + z) @ y.conj().T
        s -= float(np.real(np.trace(quad)))
        total += s
    return total / _LN2


@dataclass(frozen=True)
class FPAuxiliaries:
    """One FP iteration's auxiliaries for all users."""

    z: tuple
    y: tuple
    a: tuple
    b: tuple


def compute_auxiliaries(e_list, v_list, n0: float) -> FPAuxiliaries:
    """Closed-form Z, Y, A, B updates for the current (E, V). Hot path:
    stacked products and unvalidated Cholesky solves."""
    m = e_list[0].shape[0]
    k_users = len(e_list)
    eye = np.eye(m)
    vstack = np.hstack(v_list)
    z_list, y_list, a_list, b_list = [], [], [], []
    for k, e in enumerate(e_list):
        t = e @ vstack
        ev = t[:, k * m : (k + 1) * m]
        total = t @ t.conj().T
        sig = ev @ ev.conj().T
        psi = total - sig + n0 * eye
        psi = 0.5 * (psi + psi.conj().T)
        z = ev.conj().T @ fast_hpd_solve(psi, ev)
        z = 0.5 * (z + z.conj().T)
        y = fast_hpd_solve(0.5 * ((sig + psi) + (sig + psi).conj().T), ev)
        lead = e.conj().T @ y @ (eye + z)
        a = lead
        b = lead @ y.conj().T @ e
        z_list.append(z)
        y_list.append(y)
        a_list.append(a)
        b_list.append(0.5 * (b + b.conj().T))
    return FPAuxiliaries(z=tuple(z_list), y=tuple(y_list), a=tuple(a_list), b=tuple(b_list))


@dataclass(frozen=True)
class FPResult:
    beams: BeamformerSet
    trace: tuple  # true sum-rate after init and after each iteration
    iterations: int
    converged: bool


def fp_optimize(e_list, p_ap, n0: float, na: int, tol_rel: float = 1e-4,
                max_iters: int = 100) -> FPResult:
    """Alternating FP beamformer optimization with per-AP bisection.

    Each iteration refreshes Z, Y, A, B, freezes the cross-AP terms at the
    previous sweep's blocks (Jacobi order), solves every sub-beamformer in
    closed form with a bisected per-AP multiplier, and reassembles V. A
    damped fallback toward the previous iterate keeps the true sum-rate
    non-decreasing when the frozen cross terms overshoot.
    """
    k_users = len(e_list)
    num_aps = len(p_ap)
    beams = mmse_init(e_list, p_ap, n0, na)
    rate = sum_rate(e_list, beams.v, n0)
    trace = [rate]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        aux = compute_auxiliaries(e_list, beams.v, n0)
        # Every B_k is Hermitian, so the frozen cross term collapses to
        # 2 ([Bsum V_k]_l - [Bsum]_{l,l} Q_{l,k}) with Bsum = sum_k B_k
        # (equal to compute_Omega's sweep, see tests).
        bsum_tot = sum(aux.b)
        bv = [bsum_tot @ v for v in beams.v]
        q_new = [[None] * k_users for _ in range(num_aps)]
        for l in range(num_aps):
            diag = _sub_block(bsum_tot, l, l, na)
            omega_row = [
                2.0 * (_row_block(bv[k], l, na) - diag @ beams.q(l, k))
                for k in range(k_users)
            ]
            _, q_l = bisect_zeta(aux.a, aux.b, omega_row, p_ap[l], l, na)
            for k in range(k_users):
                q_new[l][k] = q_l[k]
        candidate = BeamformerSet.from_blocks(q_new, na)
        cand_rate = sum_rate(e_list, candidate.v, n0)
        if cand_rate < rate - 1e-9:
            # damp toward the previous feasible iterate (norm balls are convex)
            t = 0.5
            for _ in range(50):
                v_t = tuple(
                    vo + t * (vn - vo) for vo, vn in zip(beams.v, candidate.v)
                )
                damped = BeamformerSet(v=v_t, ap_antennas=na)
                damped_rate = sum_rate(e_list, damped.v, n0)
                if damped_rate >= rate - 1e-9:
                    candidate, cand_rate = damped, damped_rate
                    break
                t *= 0.5
            else:
                candidate, cand_rate = beams, rate
        delta = np.sqrt(
            sum(np.linalg.norm(vn - vo) ** 2 for vo, vn in zip(beams.v, candidate.v))
        )
        scale = np.sqrt(sum(np.linalg.norm(v) ** 2 for v in candidate.v))
        beams, rate = candidate, cand_rate
        trace.append(rate)
        if delta < tol_rel * max(scale, 1e-300):
            converged = True
            break
    return FPResult(beams=beams, trace=tuple(trace), iterations=it, converged=converged)
