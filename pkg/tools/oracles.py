"""High-precision reference values frozen into the test-suite.

Run with ``python tools/oracles.py``; it needs only :mod:`mpmath` and prints a
Python dict that is pasted into ``tests/oracle_values.py``.  Nothing in the
package imports this file, and nothing here reuses package code.
"""

import mpmath as mp

mp.mp.dps = 30


def omega(dim):
    """Area of the unit sphere S^dim."""
    return 2 * mp.pi ** (mp.mpf(dim + 1) / 2) / mp.gamma(mp.mpf(dim + 1) / 2)


def slab(N, integrand, lo):
    # int_lo^inf dt int_{R^{N-1}} integrand(rho, t) dy, polar in y.
    w = omega(N - 2)
    return mp.quad(lambda t: w * mp.quad(lambda r: integrand(r, t) * r ** (N - 2), [0, 1, mp.inf]),
                   [lo, lo + 1, mp.inf])


def A(N, mu):
    return slab(N, lambda r, t: (r * r + t * t) / (1 + r * r + t * t) ** N, mp.mpf(mu) / (N - 2))


def B(N, mu):
    return slab(N, lambda r, t: 1 / (1 + r * r + t * t) ** N, mp.mpf(mu) / (N - 2))


def C(N, mu):
    s = mp.mpf(mu) / (N - 2)
    inner = omega(N - 2) * mp.quad(lambda r: r ** (N - 2) / (1 + r * r) ** (N - 1), [0, 1, mp.inf])
    return (1 + s * s) ** (-(mp.mpf(N) - 2) / 2) * inner


def trace_quotient_W(N):
    """|grad W|^2 over R^N_+ divided by the 2_*-trace norm squared, W=(|x'|^2+(1+x_N)^2)^{-(N-2)/2}."""
    q = mp.mpf(2 * (N - 1)) / (N - 2)
    w = omega(N - 2)
    # |grad W|^2 = (N-2)^2 (|x'|^2+(1+t)^2)^{-(N-1)}
    num = (N - 2) ** 2 * mp.quad(
        lambda t: w * mp.quad(lambda r: r ** (N - 2) / (r * r + (1 + t) ** 2) ** (N - 1), [0, 1, mp.inf]),
        [0, 1, mp.inf])
    den = w * mp.quad(lambda r: r ** (N - 2) * (1 + r * r) ** (-(N - 2) * q / 2), [0, 1, mp.inf])
    return num / den ** (2 / q)


def space_quotient(N):
    """Sobolev quotient of (1+|x|^2)^{-(N-2)/2} over R^N."""
    p = mp.mpf(2 * N) / (N - 2)
    w = omega(N - 1)
    num = (N - 2) ** 2 * w * mp.quad(lambda r: r ** (N + 1) / (1 + r * r) ** N, [0, 1, mp.inf])
    den = w * mp.quad(lambda r: r ** (N - 1) / (1 + r * r) ** N, [0, 1, mp.inf])
    return num / den ** (2 / p)


def main():
    out = {}
    out["pi_over_8_line"] = mp.quad(lambda r: r * r / (1 + r * r) ** 3, [-mp.inf, 0, mp.inf])
    out["sphere_3"] = omega(3)
    for N in (4, 5, 6):
        for mu in (0, 0.5, 1):
            out[f"A_{N}_{mu}"] = A(N, mu)
            out[f"B_{N}_{mu}"] = B(N, mu)
            out[f"C_{N}_{mu}"] = C(N, mu)
        out[f"Ainf_{N}"] = slab(N, lambda r, t: (r * r + t * t) / (1 + r * r + t * t) ** N, -mp.inf)
        out[f"Binf_{N}"] = slab(N, lambda r, t: 1 / (1 + r * r + t * t) ** N, -mp.inf)
        out[f"trace_quotient_{N}"] = trace_quotient_W(N)
        out[f"space_quotient_{N}"] = space_quotient(N)
    out["trace_quotient_3"] = trace_quotient_W(3)
    print("ORACLE = {")
    for k, v in out.items():
        print(f"    {k!r}: {mp.nstr(v, 17)},")
    print("}")


if __name__ == "__main__":
    main()
