"""Dense brute-force reference for the swapping protocol.

Everything here is rebuilt from scratch on the full <=4-photon Fock space of
eight modes (495 states) and shares no code with the sparse engine:

* the Fock-space unitary is expm(i dGamma(H)) with exp(iH) equal to the mode
  unitary, instead of a multinomial expansion;
* single-mode loss Kraus operators are read off a beamsplitter dilation with
  an environment mode, instead of the binomial formula;
* loss is applied to the joint state rather than factor by factor.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm, schur

N_MODES = 8
CAP = 4
MODES = ("H1", "H2", "H3", "H4", "V1", "V2", "V3", "V4")

BASIS = [occ for occ in itertools.product(range(CAP + 1), repeat=N_MODES) if sum(occ) <= CAP]
INDEX = {occ: i for i, occ in enumerate(BASIS)}
DIM = len(BASIS)


def annihilation(mode: int) -> np.ndarray:
    a = np.zeros((DIM, DIM))
    for col, occ in enumerate(BASIS):
        n = occ[mode]
        if n:
            lowered = occ[:mode] + (n - 1,) + occ[mode + 1:]
            a[INDEX[lowered], col] = math.sqrt(n)
    return a


A = [annihilation(k) for k in range(N_MODES)]
VAC = np.zeros(DIM)
VAC[INDEX[(0,) * N_MODES]] = 1.0


def fock_unitary(u: np.ndarray) -> np.ndarray:
    """Gamma(U) on the truncated space via the generator of U."""
    t, z = schur(np.asarray(u, dtype=complex), output="complex")
    h = z @ np.diag(np.angle(np.diag(t))) @ z.conj().T
    gen = np.zeros((DIM, DIM), dtype=complex)
    for k in range(N_MODES):
        for l in range(N_MODES):
            if abs(h[k, l]) > 1e-15:
                gen += h[k, l] * (A[k].T @ A[l])
    return expm(1j * gen)


def create(*modes: str) -> np.ndarray:
    v = VAC.astype(complex)
    for m in modes:
        v = A[MODES.index(m)].T @ v
    return v


def initial_state(p: float, alpha: float) -> np.ndarray:
    """Joint state as an array of shape (9, DIM): memory index 3a+b by Fock index."""
    node_a = [(0, (), math.sqrt(1 - p)), (1, ("H1",), math.sqrt(p / 2)), (2, ("V1",), math.sqrt(p / 2))]
    node_b = [(0, (), math.sqrt(1 - p)), (1, ("H2",), math.sqrt(p / 2)), (2, ("V2",), math.sqrt(p / 2))]
    aux = [((), math.sqrt(1 - alpha**2)), (("H3", "V3"), alpha)]
    psi = np.zeros((9, DIM), dtype=complex)
    for (ma, pa, ca), (mb, pb, cb), (px, cx) in itertools.product(node_a, node_b, aux):
        psi[3 * ma + mb] += ca * cb * cx * create(*pa, *pb, *px)
    return psi


def dilation_kraus(eta: float, cap: int = CAP) -> list[np.ndarray]:
    """K_k[n', n] = <n', k_env| U_bs |n, 0_env> for a beamsplitter of transmittivity eta."""
    d = cap + 1
    a1 = np.diag(np.sqrt(np.arange(1, d)), 1)
    a = np.kron(a1, np.eye(d))
    b = np.kron(np.eye(d), a1)
    theta = math.acos(math.sqrt(eta))
    u = expm(theta * (a.T @ b - b.T @ a))
    kraus = []
    for k in range(d):
        km = np.zeros((d, d))
        for n in range(d):
            for n2 in range(d):
                # two-mode index (signal, env) -> signal*d + env; truncation is exact for n <= cap
                km[n2, n] = u[n2 * d + k, n * d + 0]
        kraus.append(km)
    return kraus


def apply_single_mode(psi: np.ndarray, mode: int, op: np.ndarray) -> np.ndarray:
    out = np.zeros_like(psi)
    for col, occ in enumerate(BASIS):
        amp = psi[:, col]
        if not np.any(amp):
            continue
        n = occ[mode]
        for n2 in range(CAP + 1):
            c = op[n2, n]
            if abs(c) < 1e-15:
                continue
            new = occ[:mode] + (n2,) + occ[mode + 1:]
            if new in INDEX:
                out[:, INDEX[new]] += c * amp
    return out


def lossy_branches(psi: np.ndarray, eta: float) -> list[np.ndarray]:
    """Unnormalized Kraus branches of the joint state after loss on every mode."""
    kraus = dilation_kraus(eta)
    branches = [psi]
    for mode in range(N_MODES):
        nxt = []
        for br in branches:
            for k in kraus:
                out = apply_single_mode(br, mode, k)
                if np.linalg.norm(out) > 1e-12:
                    nxt.append(out)
        branches = nxt
    return branches


def accepted(occ: tuple[int, ...], i: int, j: int, detector: str) -> bool:
    others = [n for m, n in enumerate(occ) if m not in (i, j)]
    if any(others):
        return False
    if detector == "pnrd":
        return occ[i] == 1 and occ[j] == 1
    return occ[i] >= 1 and occ[j] >= 1


def herald(branches: list[np.ndarray], u_fock: np.ndarray, i: int, j: int, detector: str) -> np.ndarray:
    """Unnormalized 9x9 memory state for detectors (i, j)."""
    rho = np.zeros((9, 9), dtype=complex)
    cols = [INDEX[occ] for occ in BASIS if accepted(occ, i, j, detector)]
    for br in branches:
        out = br @ u_fock.T
        for c in cols:
            v = out[:, c]
            rho += np.outer(v, v.conj())
    return rho


def evaluate(p: float, eta: float, alpha: float, u_fock: np.ndarray, i: int, j: int,
             detector: str, target: np.ndarray) -> tuple[float, float]:
    """(probability, fidelity with ``target``) for one pattern."""
    branches = lossy_branches(initial_state(p, alpha), eta)
    rho = herald(branches, u_fock, i, j, detector)
    prob = float(np.trace(rho).real)
    return prob, float((target.conj() @ rho @ target).real) / prob
