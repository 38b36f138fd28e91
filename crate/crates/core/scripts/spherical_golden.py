"""Reference values of the spherical function phi_s(r) = P_{-1/2+is}(cosh r)."""
import mpmath as mp

mp.mp.dps = 30

print("s,r,value,tolerance")
for s in ["0", "0.5", "1", "2", "5"]:
    for r in ["0.1", "0.5", "1", "2", "4", "8"]:
        v = mp.legenp(mp.mpf(-0.5) + 1j * mp.mpf(s), 0, mp.cosh(mp.mpf(r)), type=3)
        hyp = mp.hyp2f1(mp.mpf(0.5) - 1j * mp.mpf(s), mp.mpf(0.5) + 1j * mp.mpf(s), 1, -mp.sinh(mp.mpf(r) / 2) ** 2)
        assert abs(v - hyp) < mp.mpf(10) ** -20, (s, r, v, hyp)
        print(f"{s},{r},{mp.nstr(mp.re(v), 20, min_fixed=-100, max_fixed=100)},1e-10")
