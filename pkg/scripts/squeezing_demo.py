#!/usr/bin/env python3
"""Print the homodyne noise floor at the side-mode and mirror resonances.

A short tour of the public API: derive constants, fix the working point by
its modified detuning, build the drift matrix and optimise the homodyne angle.
"""
import math

from ringcavity.dynamics import build_drift, stability
from ringcavity.params import TWO_PI
from ringcavity.presets import SQUEEZING
from ringcavity.spectra import optimal_angle
from ringcavity.steady import working_point

p, d, s = working_point(SQUEEZING, delta_prime=TWO_PI * SQUEEZING.mirror_freq)
F = build_drift(d, s)
print(f"G/2pi = {d.G / TWO_PI:.1f} Hz, stable margin = {stability(F).margin:.3g} rad/s")
for label, w in (("Omega_c", d.Omega_c), ("Omega_d", d.Omega_d), ("omega_phi", d.omega_phi)):
    oa = optimal_angle(d, s, w, F)
    print(f"{label:>9s} {w / TWO_PI:8.2f} Hz  theta_opt = {math.degrees(oa.theta):7.3f} deg  S = {oa.S:.4f}")
