"""First nonzero eigenvalue of the reflecting Kerr slab problem.

Two independent references for H psi = lambda M_A psi on
M=1, a=1/2, r in [3,5], x in [-1/2,1/2], m=0:

* the vertex/face finite-difference scheme with trapezoidal mass, solved
  densely with scipy at 32 and 64 intervals per axis and Richardson
  extrapolated;
* a Legendre-Galerkin discretization of the continuum weak form, which
  converges spectrally.
"""
import numpy as np
from numpy.polynomial import legendre as L
from scipy.linalg import eigh

M, a = 1.0, 0.5
R0, R1, X0, X1 = 3.0, 5.0, -0.5, 0.5


def delta_r(r):
    return r * r - 2 * M * r + a * a


def delta_x(x):
    return 1 - x * x


def coef_a(r, x):
    return (r * r + a * a) ** 2 / delta_r(r) - a * a * (1 - x * x) ** 2 / delta_x(x)


def fd_lambda(n):
    r = np.linspace(R0, R1, n + 1)
    x = np.linspace(X0, X1, n + 1)
    hr, hx = r[1] - r[0], x[1] - x[0]
    wr = np.full(n + 1, hr); wr[[0, -1]] = hr / 2
    wx = np.full(n + 1, hx); wx[[0, -1]] = hx / 2
    N = (n + 1) ** 2
    H = np.zeros((N, N))
    idx = lambda i, j: i * (n + 1) + j
    for i in range(n + 1):
        for j in range(n + 1):
            if i < n:
                c = delta_r(0.5 * (r[i] + r[i + 1])) / hr * wx[j]
                p, q = idx(i, j), idx(i + 1, j)
                H[p, p] += c; H[q, q] += c; H[p, q] -= c; H[q, p] -= c
            if j < n:
                c = delta_x(0.5 * (x[j] + x[j + 1])) / hx * wr[i]
                p, q = idx(i, j), idx(i, j + 1)
                H[p, p] += c; H[q, q] += c; H[p, q] -= c; H[q, p] -= c
    RR, XX = np.meshgrid(r, x, indexing="ij")
    Mw = (coef_a(RR, XX) * np.outer(wr, wx)).ravel()
    vals = eigh(H, np.diag(Mw), eigvals_only=True, subset_by_index=[0, 2])
    return vals


def galerkin_lambda(deg, quad=80):
    g, w = L.leggauss(quad)
    # map [-1,1] to the intervals
    r = R0 + (g + 1) * (R1 - R0) / 2
    x = X0 + (g + 1) * (X1 - X0) / 2
    wr, wx = w * (R1 - R0) / 2, w * (X1 - X0) / 2
    V = L.legvander(g, deg)
    dV = np.stack([L.legval(g, L.legder(np.eye(deg + 1)[k])) for k in range(deg + 1)], axis=1)
    dVr, dVx = dV * 2 / (R1 - R0), dV * 2 / (X1 - X0)
    Kr = dVr.T @ np.diag(wr * delta_r(r)) @ dVr
    Mr = V.T @ np.diag(wr) @ V
    Kx = dVx.T @ np.diag(wx * delta_x(x)) @ dVx
    Mx = V.T @ np.diag(wx) @ V
    K = np.kron(Kr, Mx) + np.kron(Mr, Kx)
    RR, XX = np.meshgrid(r, x, indexing="ij")
    A = coef_a(RR, XX) * np.outer(wr, wx)
    Vt = np.kron(V, V)
    Mm = Vt.T @ (A.ravel()[:, None] * Vt)
    return eigh(K, Mm, eigvals_only=True, subset_by_index=[0, 2])


if __name__ == "__main__":
    l32, l64 = fd_lambda(32), fd_lambda(64)
    print("fd32", repr(l32[1]), "fd64", repr(l64[1]), "lambda0_64", l64[0])
    print("richardson", repr((4 * l64[1] - l32[1]) / 3))
    for d in (12, 16, 20, 24):
        print("galerkin", d, repr(galerkin_lambda(d)[1]))
