"""Weak values without the weak-coupling approximation.

Finite-difference estimates carry an error that shrinks with the step;
when the spectrum of the observable is known, a small linear solve in
exp(-i theta lambda) gives the weak value exactly at finite coupling.
"""

import numpy as np

from pse_tomo.qmath import random_hermitian, random_ket
from pse_tomo.values import WeakValueRequest, modular_value, weak_value, weak_value_exact_spectral

d = 4
a = random_hermitian(d, seed=3)
psi, phi = random_ket(d, seed=4), random_ket(d, seed=5)
exact = np.vdot(phi, a @ psi) / np.vdot(phi, psi)
print("textbook weak value", np.round(exact, 6))

for step in (1e-1, 1e-2, 1e-3):
    for method in ("first_order", "second_order"):
        req = WeakValueRequest(a, psi, phi, theta1=step, method=method)
        print(f"  {method:12s} step {step:.0e}: error {abs(weak_value(req) - exact):.2e}")

req = WeakValueRequest(a, psi, phi, method="exact_spectral", eigenvalues=np.linalg.eigvalsh(a))
moments = weak_value_exact_spectral(req)
print(f"exact spectral: error {abs(moments.weak_value - exact):.2e}, cond {moments.condition_number:.1f}")
print("higher weak moments", np.round(moments.moments[1:], 4))

# the modular value at a finite angle is read off in one shot
theta = 0.7
mv = modular_value(a, theta, psi, phi)
w, v = np.linalg.eigh(a)
direct = np.vdot(phi, v @ np.diag(np.exp(-1j * theta * w)) @ v.conj().T @ psi) / np.vdot(phi, psi)
print("modular value", np.round(mv, 6), "direct", np.round(direct, 6))
