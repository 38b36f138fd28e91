"""Reference values of the half-plane heat kernel at 30 significant digits.

H(t, d) = sqrt(2) / (4 pi t)^{3/2} e^{-t/4} int_d^inf s e^{-s^2/4t} / sqrt(cosh s - cosh d) ds

Run from the crate root:  python3 scripts/kernel_golden.py > fixtures/kernel_golden.csv
"""
import mpmath as mp

mp.mp.dps = 30

TIMES = [0.1, 0.5, 1, 2, 5]
DISTANCES = [0, 0.25, 1, 2, 3, 6]
TOLERANCE = 1e-9  # relative


def kernel(t, d):
    t, d = mp.mpf(t), mp.mpf(d)
    # s = d + u^2 removes the endpoint singularity
    def g(u):
        s = d + u * u
        den = mp.sqrt(2 * mp.sinh(d + u * u / 2) * mp.sinh(u * u / 2))
        return 2 * u * s * mp.e ** (-s * s / (4 * t)) / den if u != 0 else (
            mp.mpf(0) if d == 0 else 2 * d * mp.e ** (-d * d / (4 * t)) / mp.sqrt(mp.sinh(d)))
    upper = mp.sqrt(mp.sqrt(d * d + 4 * t * 200) - d) + 2
    # panels narrower than the Gaussian width in u, checked against a 2x refinement
    n = int(upper / min(mp.mpf("0.05"), mp.sqrt(t) / 8)) + 8
    integral = mp.quad(g, mp.linspace(0, upper, n))
    check = mp.quad(g, mp.linspace(0, upper, 2 * n))
    assert abs(integral - check) <= mp.mpf("1e-20") * abs(integral)
    return mp.sqrt(2) / (4 * mp.pi * t) ** mp.mpf(1.5) * mp.e ** (-t / 4) * integral


if __name__ == "__main__":
    print("t,d,value,tolerance")
    for t in TIMES:
        for d in DISTANCES:
            print(f"{t},{d},{mp.nstr(kernel(t, d), 20)},{TOLERANCE}")
