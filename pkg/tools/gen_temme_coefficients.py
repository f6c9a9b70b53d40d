"""Generate the coefficient table for the uniform asymptotic expansion of
the regularized incomplete gamma function used in ``rtsurv.gammamath``.

    Q(a, x) = erfc(eta * sqrt(a / 2)) / 2 + R,
    R = exp(-a eta^2 / 2) / sqrt(2 pi a) * sum_k c_k(eta) a^-k

with lam = x / a, eta^2 / 2 = lam - 1 - log(lam), sign(eta) = sign(lam - 1),
c_0 = 1 / (lam - 1) - 1 / eta and
c_k = c_{k-1}'(eta) / eta + (-1)^k g_k / (lam - 1), where g_k are the
Stirling-series coefficients of Gamma.

Each c_k is expanded as a power series in eta with exact rational
arithmetic and printed as a Python tuple of floats.

Usage: python tools/gen_temme_coefficients.py [K] [N]
"""

import sys
from fractions import Fraction as F
from math import comb


def mul(a, b, n):
    out = [F(0)] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


def recip(a, n):
    out = [F(0)] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -sum(a[j] * out[k - j] for j in range(1, min(k, len(a) - 1) + 1)) / a[0]
    return out


def sqrt_series(a, n):
    # a[0] == 1
    out = [F(0)] * n
    out[0] = F(1)
    for k in range(1, n):
        s = a[k] if k < len(a) else F(0)
        s -= sum(out[j] * out[k - j] for j in range(1, k))
        out[k] = s / 2
    return out


def lam_minus_one(n):
    """mu(eta) with eta = mu * sqrt(2 (mu - log(1 + mu)) / mu^2), by Lagrange inversion."""
    m = n + 2
    # 2 (mu - log(1 + mu)) / mu^2 = sum_k 2 (-1)^k mu^k / (k + 2)
    inner = [F(2 * (-1) ** k, k + 2) for k in range(m)]
    phi = sqrt_series(inner, m)      # eta / mu
    base = recip(phi, m)             # mu / eta(mu)
    mu = [F(0)] * n
    power = [F(1)] + [F(0)] * (m - 1)
    for k in range(1, n):
        power = mul(power, base, m)  # base^k
        mu[k] = power[k - 1] / k
    return mu


def stirling_g(k_max):
    """g_k in Gamma(z) ~ e^-z z^z sqrt(2 pi / z) sum g_k z^-k, from the log series."""
    bern = [F(1)]
    for m in range(1, 2 * k_max + 4):
        bern.append(-sum(comb(m + 1, j) * bern[j] for j in range(m)) / (m + 1))
    # log Gamma* = sum_{j>=1} B_{2j} / (2j (2j - 1) z^(2j - 1))
    logs = [F(0)] * (k_max + 1)
    for j in range(1, k_max + 1):
        if 2 * j - 1 <= k_max:
            logs[2 * j - 1] = bern[2 * j] / (2 * j * (2 * j - 1))
    # exponentiate a series in 1/z
    g = [F(0)] * (k_max + 1)
    g[0] = F(1)
    for k in range(1, k_max + 1):
        g[k] = sum(j * logs[j] * g[k - j] for j in range(1, k + 1)) / k
    return g


def main(k_max=10, n_terms=26):
    n = n_terms + 2 * k_max + 4
    mu = lam_minus_one(n + 2)
    # 1 / mu = (1 / eta) * inv, inv = 1 / (mu / eta)
    inv = recip(mu[1:], n + 1)
    g = stirling_g(k_max)
    # c_0 = (inv - 1) / eta
    c = [inv[k + 1] for k in range(n)]
    table = [c[:n_terms]]
    for k in range(1, k_max):
        # derivative divided by eta: coefficient of eta^(j-2) is j c[j]; the
        # eta^-1 term must cancel against (-1)^k g_k inv_0 / eta
        sign = (-1) ** k
        assert c[1] + sign * g[k] * inv[0] == 0, k
        nxt = []
        for j in range(0, len(c) - 2):
            nxt.append((j + 2) * c[j + 2] + sign * g[k] * inv[j + 1])
        c = nxt
        table.append(c[:n_terms])
    print("_TEMME = (")
    for row in table:
        vals = ", ".join(repr(float(v)) for v in row)
        print(f"    ({vals}),")
    print(")")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:]))
