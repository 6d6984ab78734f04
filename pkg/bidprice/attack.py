# bidprice/attack.py
"""
Reconstruction audits against published payloads.

These are the concrete attacks a semi-honest party could mount when some
key material leaks or a party's structure is degenerate. They exist to show
which configurations must be avoided.
"""
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy import linalg

from .exceptions import AttackError
from .masking import MaskedPartyData

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class Reconstruction:
    """Private blocks rebuilt from a payload, in the payload's column order."""
    party: str
    D: np.ndarray
    E: np.ndarray
    H: np.ndarray
    L: np.ndarray
    A: np.ndarray
    B: np.ndarray
    r: np.ndarray
    c_k: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    residuals: Dict[str, float]


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if matrix.size == 0:
        return np.zeros((0,) + rhs.shape[1:])
    if np.linalg.cond(matrix) > CONDITION_LIMIT:
        raise AttackError(f"Leaked {what} is singular")
    try:
        return linalg.solve(matrix, rhs)
    except linalg.LinAlgError as e:
        raise AttackError(f"Leaked {what} is singular: {e}") from e


def _right_inverse_of_transpose(D: np.ndarray) -> np.ndarray:
    """D (D'D)^-1, so that D' times it is the identity; equals D^-T for square D."""
    return D @ _solve(D.T @ D, np.eye(D.shape[1]), "D'D")


def _left_inverse(E: np.ndarray) -> np.ndarray:
    """(E'E)^-1 E', equal to E^-1 for square E."""
    if E.size == 0:
        return np.zeros((E.shape[1], E.shape[0]))
    return _solve(E.T @ E, E.T, "E'E")


def _residual(actual: np.ndarray, rebuilt: np.ndarray) -> float:
    return float(np.max(np.abs(actual - rebuilt), initial=0.0))


def audit_attack(payload: MaskedPartyData, G: np.ndarray, F: np.ndarray) -> Reconstruction:
    """
    Rebuild a party's keys and private data from its payload and leaked G, F.

    D = (G^-1 G_bar)', A = A_bar D^-T, H = H_bar D^-T, eta = H^-1 eta_bar,
    B = F^-1 B_bar D^-T, E = (F^-1 F_bar)', xi = E^-1 xi_bar,
    r = D^-1 r_bar - B'xi, c_k = F^-1 c_bar - B eta. For rectangular keys
    the inverses of D and E are replaced by the least-squares ones.
    """
    D = _solve(G, payload.G_bar, "G").T
    D_inv_T = _right_inverse_of_transpose(D)
    D_pinv = _left_inverse(D)

    A = payload.A_bar @ D_inv_T
    H = payload.H_bar @ D_inv_T
    eta = _solve(H, payload.eta_bar, "H")

    if payload.m_k:
        B = _solve(F, payload.B_bar, "F") @ D_inv_T
        E = _solve(F, payload.F_bar, "F").T
        xi = _left_inverse(E) @ payload.xi_bar
        L = payload.L_bar @ E @ _solve(E.T @ E, np.eye(E.shape[1]), "E'E")
        c_k = _solve(F, payload.c_bar, "F") - B @ eta
    else:
        B = np.zeros((0, payload.n))
        E = np.zeros((payload.t, 0))
        xi = np.zeros(0)
        L = np.zeros((0, 0))
        c_k = np.zeros(0)

    r = D_pinv @ payload.r_bar - B.T @ xi

    residuals = {
        "A_bar": _residual(payload.A_bar, A @ D.T),
        "r_bar": _residual(payload.r_bar, D @ (r + B.T @ xi)),
        "one_bar": _residual(payload.one_bar, G @ (1.0 + eta)),
        "A_eta": _residual(payload.A_eta, A @ eta),
    }
    logger.info(f"Reconstructed party {payload.party} from leaked keys, residuals {residuals}")
    return Reconstruction(
        party=payload.party, D=D, E=E, H=H, L=L, A=A, B=B, r=r, c_k=c_k, eta=eta, xi=xi, residuals=residuals,
    )


def derive_g_scalar(payload: MaskedPartyData) -> np.ndarray:
    """For n_k = s_k = 1: G = 1_bar - G_bar H_bar^-1 eta_bar."""
    if payload.n != 1 or payload.s != 1:
        raise AttackError(f"Scalar derivation of G needs n_k = s_k = 1, got n_k={payload.n}, s_k={payload.s}")
    h_bar = float(payload.H_bar[0, 0])
    if h_bar == 0.0:
        raise AttackError("H_bar is zero")
    return np.array([[float(payload.one_bar[0]) - float(payload.G_bar[0, 0]) * float(payload.eta_bar[0]) / h_bar]])


def derive_f_scalar(payload: MaskedPartyData, D: np.ndarray, eta: np.ndarray, c_k: float) -> np.ndarray:
    """For m_k = 1 with known c_k: F = (c_bar - (B_bar D^-T) eta) / c_k."""
    if payload.m_k != 1:
        raise AttackError(f"Scalar derivation of F needs m_k = 1, got m_k={payload.m_k}")
    if c_k == 0:
        raise AttackError("c_k is zero")
    fb = payload.B_bar @ _right_inverse_of_transpose(D)
    return np.array([[(float(payload.c_bar[0]) - float((fb @ eta)[0])) / c_k]])


def audit_small_party(payload: MaskedPartyData, c_k: float) -> Reconstruction:
    """
    Full reconstruction of a single-variable party with one private row and
    a known private capacity, without any leaked key.
    """
    G = derive_g_scalar(payload)
    D = _solve(G, payload.G_bar, "G").T
    H = payload.H_bar @ _right_inverse_of_transpose(D)
    eta = _solve(H, payload.eta_bar, "H")
    F = derive_f_scalar(payload, D, eta, c_k)
    return audit_attack(payload, G, F)


def identity_incidence_exposure(payload: MaskedPartyData) -> np.ndarray:
    """With A_k = I and no permutation, A_bar = D' reveals D directly."""
    if payload.A_bar.shape[0] != payload.n:
        raise AttackError(f"A_k has {payload.A_bar.shape[0]} rows, identity needs {payload.n}")
    return payload.A_bar.T.copy()
