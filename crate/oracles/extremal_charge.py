"""Horizon charge of bump data by adaptive quadrature in theta (mpmath, 40 digits)."""
from mpmath import mp, mpf, quad, sin, cos, pi, legendre

mp.dps = 40


def charge(M, a, ur, u, p):
    f = lambda th: (2 * (M**2 + a**2) * ur(th) + 2 * M * u(th) + a**2 * sin(th) ** 2 * p(th)) * sin(th)
    return quad(f, [0, pi])


dc = mpf("0.5")
# extremal RN, u0 = y (dc - y)^2 (1 + P2(cos th)/2): ur(M) = dc^2 (1 + P2/2), u(M) = 0
rn = charge(mpf(1), 0, lambda th: dc**2 * (1 + legendre(2, cos(th)) / 2), lambda th: 0, lambda th: 0)
# extremal RN, u0 = (dc - y)^2: u(M) = dc^2, ur(M) = -2 dc
rn2 = charge(mpf(1), 0, lambda th: -2 * dc, lambda th: dc**2, lambda th: 0)
# extremal Kerr M = a = 1, u0 = y (dc - y)^2, p0 = 1/5
kerr = charge(mpf(1), mpf(1), lambda th: dc**2, lambda th: 0, lambda th: mpf(1) / 5)
print("rn_bump", mp.nstr(rn, 20))
print("rn_offset", mp.nstr(rn2, 20))
print("kerr_bump", mp.nstr(kerr, 20))
