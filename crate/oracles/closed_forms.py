"""High-precision closed-form values frozen into the Rust tests."""
from mpmath import mp, mpf, sqrt

mp.dps = 50

M, a, omega = mpf(1), mpf(1) / 2, mpf("0.3")
rp = M + sqrt(M**2 - a**2)
rm = M - sqrt(M**2 - a**2)
kappa = 2 * (rp - M)
sigma = (rp**2 + a**2) * omega / kappa
print("kerr r_plus      ", mp.nstr(rp, 20))
print("radial kappa     ", mp.nstr(kappa, 20))
print("radial sigma_h   ", mp.nstr(sigma, 20))

omega_h = a / (rp**2 + a**2)
kappa_h = (rp - rm) / (2 * (rp**2 + a**2))
print("kn r_minus       ", mp.nstr(rm, 20))
print("kn Omega_H       ", mp.nstr(omega_h, 20))
print("kn kappa_plus    ", mp.nstr(kappa_h, 20))
