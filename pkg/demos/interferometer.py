"""Single-photon Mach-Zehnder read-out of a Kraus element and a coherence.

The photon path is the probe and its polarization the system.  The
simulation pushes the state through each optical element and compares
the detector statistics with their closed forms.
"""

import numpy as np

from pse_tomo.framework import kraus_from_dilation
from pse_tomo.mzi import (
    MziScenario,
    _cell,
    channel_output,
    kraus_closed_form,
    propagate,
    reconstruct_mzi_density_element,
    reconstruct_mzi_kraus_element,
    xx_coupling,
)
from pse_tomo.qmath import SIGMA_X

phi, delta = 0.4, 0.9
u_se = xx_coupling(phi)

scn = MziScenario("kraus", alpha=np.pi / 4, delta=delta, U_SE=u_se)
table = propagate(scn)
print("detector probabilities at (H, 0_E):", {k: round(v, 4) for k, v in _cell(table, 0).items()})
print("closed form                       :", {k: round(float(v), 4) for k, v in kraus_closed_form(scn).items()})
est = reconstruct_mzi_kraus_element(scn, table)
print("<H|A_0|V> measured", np.round(est, 6))
print("           target ", np.round(kraus_from_dilation(u_se, scn.xi, 0)[0, 1], 6))
print("      -i sin sin  ", np.round(-1j * np.sin(phi) * np.sin(delta), 6))

dens = MziScenario("density", delta=delta, U_S=SIGMA_X, U_SE=u_se)
print("<H|rho|V> measured", np.round(reconstruct_mzi_density_element(dens), 6))
print("          target  ", np.round(channel_output(dens)[0, 1], 6))

# unbalanced splitting only rescales the signal
for alpha in (0.2, 0.5, 1.0):
    s = MziScenario("kraus", alpha=alpha, delta=delta, U_SE=u_se)
    print(f"alpha {alpha}: estimate {np.round(reconstruct_mzi_kraus_element(s), 6)}")
