"""Rates and covariances: interference-plus-noise covariance, whitened signal
covariance, per-user/sum rates in bits/s/Hz, and empirical CDFs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import hermitian_solve, logdet2_hpd


def interference_cov(e_k: np.ndarray, v_list, k: int, n0: float) -> np.ndarray:
    """Psi_k = sum_{k' != k} E_k V_k' V_k'^H E_k^H + N0 I."""
    if n0 <= 0:
        raise ValidationError(f"noise power must be positive, got {n0}")
    m = e_k.shape[0]
    psi = n0 * np.eye(m, dtype=np.complex128)
    for kp, v in enumerate(v_list):
        if kp == k:
            continue
        ev = e_k @ v
        psi = psi + ev @ ev.conj().T
    return 0.5 * (psi + psi.conj().T)


def whitened_cov(e_k: np.ndarray, v_k: np.ndarray, psi_k: np.ndarray) -> np.ndarray:
    """Gamma_k = V_k^H E_k^H Psi_k^{-1} E_k V_k (Hermitian PSD)."""
    ev = e_k @ v_k
    gamma = ev.conj().T @ hermitian_solve(psi_k, ev)
    return 0.5 * (gamma + gamma.conj().T)


def user_rate(gamma_k: np.ndarray) -> float:
    """eta_k = log2 det(I + Gamma_k) in bits/s/Hz."""
    m = gamma_k.shape[0]
    return logdet2_hpd(np.eye(m) + gamma_k)


_LN2 = np.log(2.0)


def per_user_rates(e_list, v_list, n0: float) -> np.ndarray:
    """All user rates via the whitened-covariance route. Hot path: one
    stacked product per user, plain LAPACK solves, no revalidation."""
    k_users = len(e_list)
    m = e_list[0].shape[0]
    vstack = np.hstack(v_list)
    eye = np.eye(m)
    rates = np.empty(k_users)
    for k, e_k in enumerate(e_list):
        t = e_k @ vstack
        t_k = t[:, k * m : (k + 1) * m]
        total = t @ t.conj().T
        psi = total - t_k @ t_k.conj().T + n0 * eye
        psi = 0.5 * (psi + psi.conj().T)
        gamma = t_k.conj().T @ np.linalg.solve(psi, t_k)
        _, logdet = np.linalg.slogdet(eye + gamma)
        rates[k] = logdet / _LN2
    return rates


def sum_rate(e_list, v_list, n0: float) -> float:
    return float(np.sum(per_user_rates(e_list, v_list, n0)))


def cdf_points(samples) -> list:
    """Empirical CDF as sorted (value, i/n) pairs."""
    samples = list(samples)
    if not samples:
        raise ValidationError("cdf_points requires a nonempty sample")
    n = len(samples)
    return [(v, (i + 1) / n) for i, v in enumerate(sorted(samples))]


@dataclass(frozen=True)
class RateReport:
    """Rates and per-AP powers for one method on one trial."""

    per_user_rate: tuple
    sum_rate: float
    per_ap_power: tuple
    seed: int = 0
    trial: int = 0
    architecture: str = ""
    p_max_dbm: float = 0.0

    @classmethod
    def from_solution(cls, e_list, beams, n0, **meta) -> "RateReport":
        rates = per_user_rates(e_list, beams.v, n0)
        return cls(
            per_user_rate=tuple(float(r) for r in rates),
            sum_rate=float(np.sum(rates)),
            per_ap_power=tuple(float(p) for p in beams.per_ap_power()),
            **meta,
        )
