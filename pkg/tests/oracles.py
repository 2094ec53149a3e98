"""Independent reference computations used by the tests.

Each oracle avoids the code path it checks: explicit loops instead of
einsum/kron, Taylor series instead of eigendecompositions.
"""

import itertools

import numpy as np


def kron_loop(a, b):
    a, b = np.asarray(a), np.asarray(b)
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), dtype=complex)
    for i, j, k, l in itertools.product(range(a.shape[0]), range(a.shape[1]), range(b.shape[0]), range(b.shape[1])):
        out[i * b.shape[0] + k, j * b.shape[1] + l] = a[i, j] * b[k, l]
    return out


def partial_trace_loop(m, dims, keep):
    """Sum over the traced indices one basis element at a time."""
    dims = list(dims)
    n = len(dims)
    kd = [dims[i] for i in keep]
    td = [dims[i] for i in range(n) if i not in keep]
    size = int(np.prod(kd)) if kd else 1
    out = np.zeros((size, size), dtype=complex)

    def flat(idx):
        f = 0
        for i, d in zip(idx, dims):
            f = f * d + i
        return f

    def merge(kept, traced):
        idx, ki, ti = [], iter(kept), iter(traced)
        for i in range(n):
            idx.append(next(ki) if i in keep else next(ti))
        return idx

    kept_all = list(itertools.product(*[range(d) for d in kd]))
    for r, kr in enumerate(kept_all):
        for c, kc in enumerate(kept_all):
            for t in itertools.product(*[range(d) for d in td]):
                out[r, c] += m[flat(merge(kr, t)), flat(merge(kc, t))]
    return out


def expm_taylor(m, terms=30, squarings=12):
    """exp(m) by scaling and squaring with a truncated Taylor series."""
    m = np.asarray(m, dtype=complex) / 2**squarings
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def kraus_block(u_se, xi, k, d_s, d_e):
    """<k_E|U_SE|xi_E> by explicit row/column selection."""
    a = np.zeros((d_s, d_s), dtype=complex)
    for i in range(d_s):
        for j in range(d_s):
            a[i, j] = sum(u_se[i * d_e + k, j * d_e + e] * xi[e] for e in range(d_e))
    return a


def probe_signal(rho_s, u_s, u_t, u_se, chi, xi, phi, k):
    """The right side of the extraction identity, symbol by symbol."""
    d_s = rho_s.shape[0]
    d_e = len(xi)
    a_k = kraus_block(u_se, xi, k, d_s, d_e)
    n = 2 * np.conj(chi[0]) * chi[1] * np.conj(xi[k])
    return n * (np.conj(phi) @ a_k @ u_t @ rho_s @ u_s.conj().T @ phi)


def haar(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rand_ket(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def rand_rho(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    r = g @ g.conj().T
    return r / np.trace(r).real
