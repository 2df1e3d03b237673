"""CODATA physical constants shared by every module.

Defined once here so golden numbers cannot drift between modules.
"""

import numpy as np
from scipy import constants as _c

e = _c.e
h = _c.h
hbar = _c.hbar
k_B = _c.k
mu_0 = _c.mu_0
phi_0 = h / (2 * e)  # magnetic flux quantum

BCS_RATIO = 1.764  # Delta_00 / (k_B T_c), weak-coupling BCS

TWO_PI = 2 * np.pi


def angular(frequency_hz):
    """Hz -> rad/s."""
    return TWO_PI * frequency_hz


def ordinary(angular_frequency):
    """rad/s -> Hz."""
    return angular_frequency / TWO_PI
