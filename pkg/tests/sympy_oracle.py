"""Independent oracle: abelian cokernel types from sympy integer invariant factors.

An R-matrix is expanded to its nd x nd multiplication matrix over Z, the
block [A | mI] is diagonalized over Z, and p-adic valuations of the
invariant factors give the abelian type.
"""
import itertools
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

def vp(x, p):
    k = 0
    while x % p == 0:
        x //= p; k += 1
    return k

def abelian_type(Aint, m, p):
    # Aint: list of rows (square, over Z/m)
    n = len(Aint)
    M = Matrix([list(r) + [m if i == j else 0 for j in range(n)] for i, r in enumerate(Aint)])
    inv = invariant_factors(M, domain=ZZ)
    parts = sorted((vp(int(f), p) for f in inv if int(f) != 1), reverse=True)
    return tuple(x for x in parts if x > 0)

def polymulmod(a, b, P, m):
    d = len(P) - 1
    prod = [0] * (2 * d - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] += x * y
    for k in range(2 * d - 2, d - 1, -1):
        c = prod[k]
        if c:
            for j in range(d + 1):
                prod[k - d + j] -= c * P[j]
    return tuple(x % m for x in prod[:d])

def r_to_Z(Z, P, m):
    # R-matrix (n x n entries coeff tuples) -> nd x nd integer matrix of multiplication
    n = len(Z); d = len(P) - 1
    big = [[0] * (n * d) for _ in range(n * d)]
    for j in range(n):
        for k in range(d):
            tk = tuple(1 if i == k else 0 for i in range(d))
            for i in range(n):
                v = polymulmod(Z[i][j], tk, P, m)
                for c in range(d):
                    big[i * d + c][j * d + k] = v[c]
    return big

def pencil(Y, P, m, twists=()):
    n = len(Y); d = len(P) - 1
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            c = [0] * d
            c[0] = Y[i][j]
            if d == 1:
                c[0] = (c[0] + P[0]) % m
            else:
                c[1] = (-1 if i == j else 0) % m
                for k, Mk in enumerate(twists, start=1):
                    c[k] = (c[k] + Mk[i][j]) % m
            row.append(tuple(c))
        out.append(row)
    return out

def fiber_hist(Xbar, p, N, P, twists=()):
    m = p ** (N + 1); n = len(Xbar); d = len(P) - 1
    hist = {}
    for digs in itertools.product(range(p ** N), repeat=n * n):
        Y = [[(Xbar[i][j] + p * digs[i * n + j]) % m for j in range(n)] for i in range(n)]
        Z = pencil(Y, P, m, twists)
        t = abelian_type(r_to_Z(Z, P, m), m, p)
        # R-type = every d-th part
        rt = t[::d]
        hist[rt] = hist.get(rt, 0) + 1
    return hist
