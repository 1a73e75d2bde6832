"""Quick check that the extension imports and the main calls agree with known values."""

import math

import qisolab

harmonic = qisolab.Potential.harmonic()
coarse = qisolab.SolverConfig(n=3999)

s = qisolab.spectrum(harmonic, 1.0, 10.0, coarse)
assert len(s) == 5, s
for j, lam in enumerate(s.eigenvalues):
    assert abs(lam - (2 * j + 1)) < 1e-8, (j, lam)

p = qisolab.Potential(t=0.05, eps=0.05)
print(p, p.partner())
assert all(ok for _, ok, _ in p.validate())

plus = qisolab.spectrum(p, 0.5, 1.2, coarse)
minus = qisolab.spectrum(p.partner(), 0.5, 1.2, coarse)
d = qisolab.isospectral_distance(plus, minus, 1.2)
print("distance at h=0.5:", d)

ex = qisolab.ground_state_excess(p, 0.5, coarse)
assert ex["excess"] > 10 * ex["error_estimate"], ex

lam, err = qisolab.shoot_eigenvalue(harmonic, 1.0, 1)
assert abs(lam - 1.0) < 1e-6, (lam, err)

w = qisolab.asymmetry_witness(0.05, 1.0, coarse)
print("witness:", w)

web = qisolab.weber_solution()
assert web["c"] > 1.0 and all(ok for _, ok in web["properties"]), web["properties"]
print("c =", web["c"])

nu, _ = qisolab.spectral_density(harmonic, 0.5, scale=1.0, config=coarse)
assert abs(nu - 1.0 / (2.0 * math.sinh(0.5))) < 1e-6, nu
a0, _ = qisolab.weyl_term(harmonic)
assert abs(a0 - math.pi) < 1e-8, a0

try:
    qisolab.spectrum(p, -1.0, 1.0)
except ValueError as e:
    print("rejected:", e)
else:
    raise AssertionError("negative h accepted")

print("ok")
