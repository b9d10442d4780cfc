import time
import numpy as np
from htgeo import geometry as G
from htgeo import curvature as C

cat = G.reference_metrics()
rng = np.random.default_rng(3)

# --- flat space: everything zero
m = cat["flat_r4"].field
pts = rng.normal(size=(5, 4))
bc = C.curvature_batch(m, "cartesian", pts)
print("flat |Riem|:", np.max(np.abs(bc.riemann_up)))

# --- round S4: S = 12, W = 0, Z = 0, euler density both routes
m = cat["round_s4"].field
pts = rng.normal(size=(8, 4)) * 1.2
bc = C.curvature_batch(m, "stereographic", pts)
print("S4 scalar:", bc.scalar[:3], "err:", np.max(np.abs(bc.scalar - 12)))
d = C.density_fields(bc)
print("S4 |W+|^2, |W-|^2, z2:", np.max(d["w2_plus"]), np.max(d["w2_minus"]), np.max(d["z2"]))
print("S4 euler routes:", d["euler"][:2], d["euler_pfaffian"][:2], "expect", 6 / (8 * np.pi ** 2))
print("S4 L routes:", np.max(np.abs(d["l"])), np.max(np.abs(d["l_polynomial"])))

# --- reassembly check on S2xS2
m = cat["s2xs2"].field
pts = np.stack([rng.uniform(0.5, 2.5, 6), rng.uniform(0, 6, 6),
                rng.uniform(0.5, 2.5, 6), rng.uniform(0, 6, 6)], axis=-1)
bc = C.curvature_batch(m, "angles", pts)
op_re = C.reassembled_operator(bc)
print("s2xs2 reassembly:", np.max(np.abs(op_re - bc.operator6)))
d = C.density_fields(bc)
print("s2xs2 euler routes:", d["euler"][:2], d["euler_pfaffian"][:2])
# chi = 4, vol = (4pi)^2 => mean euler density = 4/(16 pi^2) = 1/(4 pi^2)
print("  expect density:", 1 / (4 * np.pi ** 2) / (np.sin(pts[0, 0]) * np.sin(pts[0, 2])), "hmm pointwise:", d["euler"][0])

# --- R2xS2: pfaffian identically 0
m = cat["r2xs2"].field
pts = np.stack([rng.normal(size=6), rng.normal(size=6),
                rng.uniform(0.5, 2.5, 6), rng.uniform(0, 6, 6)], axis=-1)
bc = C.curvature_batch(m, "mixed", pts)
d = C.density_fields(bc)
print("r2xs2 euler:", np.max(np.abs(d["euler"])), np.max(np.abs(d["euler_pfaffian"])))
print("r2xs2 scalar:", bc.scalar[:3])
print("r2xs2 reassembly:", np.max(np.abs(C.reassembled_operator(bc) - bc.operator6)))
print("r2xs2 w2p vs w2m:", d["w2_plus"][:2], d["w2_minus"][:2])

# --- Taub-NUT k=1: Ricci flat, one Weyl side ~ 0, which side?
cfg = G.MonopoleConfig.standard(1)
tn = G.gh_metric(cfg)
npts = 12
x = rng.normal(size=(npts, 3)) * 2.0 + cfg.points[0]
keep = np.linalg.norm(x - cfg.points[0], axis=1) > 0.4
x = x[keep]
pts = np.concatenate([x, rng.uniform(0, 2 * np.pi, (len(x), 1))], axis=1)
t0 = time.time()
bc = C.curvature_batch(tn, "gibbons_hawking", pts)
d = C.density_fields(bc)
print("TN |Ric|:", np.max(d["ricci_frobenius"]))
print("TN w2p:", np.max(d["w2_plus"]), " w2m:", np.max(d["w2_minus"]))
print("TN euler routes rel:", np.max(np.abs(d["euler"] - d["euler_pfaffian"]) / np.abs(d["euler"])))
print("TN l routes rel:", np.max(np.abs(d["l"] - d["l_polynomial"]) / np.abs(d["l"])))
print("TN l sign (expect negative):", d["l"][:4])
print("TN reassembly:", np.max(np.abs(C.reassembled_operator(bc) - bc.operator6)))
print("TN bianchi:", np.max(np.abs(bc.riemann_up + np.moveaxis(bc.riemann_up, [2, 3, 4], [3, 4, 2]) + np.moveaxis(bc.riemann_up, [2, 3, 4], [4, 2, 3]))))

# EH chart curvature: Ricci flat and same L sign
ys = rng.normal(size=(8, 4)) * 0.4
ys = ys[np.linalg.norm(ys, axis=1) > 0.15]
bc2 = C.curvature_batch(tn, "eguchi_hanson:0", ys)
d2 = C.density_fields(bc2)
print("EH |Ric|:", np.max(d2["ricci_frobenius"]))
print("EH w2p:", np.max(d2["w2_plus"]), " w2m:", np.max(d2["w2_minus"]))
print("EH l sign:", d2["l"][:4])
print("timing for", len(pts) + len(ys), "points:", time.time() - t0)

# speed probe: batch of 20000 points
xs = rng.normal(size=(20000, 3)) * 3 + cfg.points[0]
xs = xs[np.linalg.norm(xs - cfg.points[0], axis=1) > 0.35]
ptsb = np.concatenate([xs, rng.uniform(0, 2 * np.pi, (len(xs), 1))], axis=1)
t0 = time.time()
dd = C.characteristic_densities(tn, "gibbons_hawking", ptsb, chunk=4096)
t1 = time.time()
print(f"throughput: {len(ptsb)} pts in {t1-t0:.2f}s -> {len(ptsb)/(t1-t0):.0f} pts/s")
