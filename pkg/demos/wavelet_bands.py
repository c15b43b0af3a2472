"""
Where does a tone land in the decomposition?
============================================

Run with ``python3 demos/wavelet_bands.py``.
"""

import numpy as np

from wearable_eeg.wavelet import (BAND_NAMES, band_for_level, dwt_multilevel, inverse_dwt,
                                  physical_band_for_level)

fs = 220.0
t = np.arange(9240) / fs  # 42 s at 220 Hz

# the nominal table next to what each level of a 6-level db4 transform resolves
print(f"{'level':>5}  {'name':<9} {'nominal Hz':>15} {'physical Hz':>15}")
for level in range(1, 8):
    nom, phy = band_for_level(level, fs), physical_band_for_level(level, fs)
    print(f"{level:>5}  {nom.name:<9} {nom.low_hz:6.2f}-{nom.high_hz:<7.2f} "
          f"{phy.low_hz:6.2f}-{phy.high_hz:<7.2f}")

# energy share per level for a few pure tones
print()
print(f"{'tone':>8}  " + "  ".join(f"{n:>8}" for n in BAND_NAMES))
for f in (2.0, 5.0, 10.0, 20.0, 40.0, 80.0):
    coeffs = dwt_multilevel(np.sin(2 * np.pi * f * t))
    e = np.array([c @ c for c in coeffs])
    print(f"{f:6.1f}Hz  " + "  ".join(f"{100 * v / e.sum():7.1f}%" for v in e))

# orthogonal transform: energy is preserved and the inverse is exact
x = np.random.default_rng(0).normal(size=t.size)
coeffs = dwt_multilevel(x)
print()
print("energy ratio", sum(c @ c for c in coeffs) / (x @ x))
print("reconstruction error", np.linalg.norm(inverse_dwt(coeffs, len(x)) - x))
