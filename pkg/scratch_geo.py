import numpy as np
from htgeo import geometry as G

rng = np.random.default_rng(7)
cfg = G.MonopoleConfig.standard(2)
m = G.gh_metric(cfg)

# 1. det(g) = V^2 on GH chart
pts = rng.normal(size=(20, 3)) * 2.0
pts = pts[np.min(np.linalg.norm(pts[:, None] - cfg.points, axis=-1), axis=1) > 0.3]
coords = np.concatenate([pts, rng.uniform(0, 2 * np.pi, (len(pts), 1))], axis=1)
g = m.components("gibbons_hawking", coords)
V = G.potential(cfg, pts)
print("det-V^2:", np.max(np.abs(np.linalg.det(g) - V ** 2)))

# 2. EH chart vs GH chart via transition map (numerical pullback)
i = 0
y0 = np.array([0.31, -0.22, 0.4, 0.12])
def trans(y):
    # y -> (x, theta) of the GH chart, symmetric gauge
    x = cfg.points[i] + G.TaubNutMetric._hopf(y)
    r, phi, psi, theta = G.eh_coordinates_inverse(y)
    return np.concatenate([x, np.atleast_1d(theta)], axis=-1)

h = 1e-6
J = np.zeros((4, 4))
for mu in range(4):
    e = np.zeros(4); e[mu] = h
    J[:, mu] = (trans(y0 + e) - trans(y0 - e)) / (2 * h)
gh_at = m.components("gibbons_hawking", trans(y0)[None], gauge=np.zeros((1, 2)))[0]
pull = J.T @ gh_at @ J
eh_at = m.components("eguchi_hanson:0", y0[None], gauge=np.zeros((1, 2)))[0]
print("EH vs GH pullback:", np.max(np.abs(pull - eh_at)))

# orientation of transition map
print("det J (transition):", np.linalg.det(J))

# 3. eh_coordinates round trip + flat pullback
r, phi, psi, theta = 0.8, 1.1, 2.2, 0.7
y = G.eh_coordinates(r, phi, psi, theta)
print("|y|^2 - 2r:", np.sum(y * y) - 2 * r)
rr, pp, ps, th = G.eh_coordinates_inverse(y)
print("roundtrip:", abs(rr - r), abs(pp - phi), abs(ps - psi), abs(th - theta))

def fwd(q):
    return G.eh_coordinates(q[0], q[1], q[2], q[3])
Jf = np.zeros((4, 4))
q0 = np.array([r, phi, psi, theta])
for mu in range(4):
    e = np.zeros(4); e[mu] = h
    Jf[:, mu] = (fwd(q0 + e) - fwd(q0 - e)) / (2 * h)
flat_pull = Jf.T @ Jf
print("flat pullback vs model:", np.max(np.abs(flat_pull - G.flat_model_metric(r, phi))))

# 4. hyperkahler triple
pt = G.ChartPoint("gibbons_hawking", np.array([0.9, -1.4, 0.8, 0.3]))
J1, J2, J3 = G.hyperkahler_triple(cfg, pt)
gp = m.at(pt)
print("J1^2+Id:", np.max(np.abs(J1 @ J1 + np.eye(4))))
print("J2^2+Id:", np.max(np.abs(J2 @ J2 + np.eye(4))))
print("J1J2-J3:", np.max(np.abs(J1 @ J2 - J3)))
print("J1J2+J3:", np.max(np.abs(J1 @ J2 + J3)))
print("g-compat:", np.max(np.abs(J1.T @ gp @ J1 - gp)))
print("J1J2J3+Id:", np.max(np.abs(J1 @ J2 @ J3 + np.eye(4))))

# 5. V harmonic (FD laplacian)
x0 = np.array([0.6, 0.2, -0.5])
h2 = 1e-3
lap = 0.0
for muu in range(3):
    e = np.zeros(3); e[muu] = h2
    lap += (G.potential(cfg, x0 + e) - 2 * G.potential(cfg, x0) + G.potential(cfg, x0 - e)) / h2 ** 2
print("laplacian V:", lap)

# 6. d omega = * dV (FD both sides), symmetric gauge
def omega(x):
    return G.connection_form(cfg, x, gauge="symmetric")
def dV(x):
    hh = 1e-5
    out = np.zeros(3)
    for muu in range(3):
        e = np.zeros(3); e[muu] = hh
        out[muu] = (G.potential(cfg, x + e) - G.potential(cfg, x - e)) / (2 * hh)
    return out
hh = 1e-4
domega = np.zeros((3, 3))
for muu in range(3):
    e = np.zeros(3); e[muu] = hh
    dp, dm = omega(x0 + e), omega(x0 - e)
    domega[muu] = (dp - dm) / (2 * hh)
curl = np.array([domega[1, 2] - domega[2, 1],
                 domega[2, 0] - domega[0, 2],
                 domega[0, 1] - domega[1, 0]])
# (d omega)_{mu nu} = pd_mu om_nu - pd_nu om_mu; *dV has components eps_{mu nu l} dV_l
star = dV(x0)
print("d omega vs * dV:", np.max(np.abs(curl - star)))

# gauge covariance of d omega
def omega_up(x):
    return G.connection_form(cfg, x, gauge=np.array([1.0, 1.0]))
domega2 = np.zeros((3, 3))
for muu in range(3):
    e = np.zeros(3); e[muu] = hh
    domega2[muu] = (omega_up(x0 + e) - omega_up(x0 - e)) / (2 * hh)
print("gauge covariance:", np.max(np.abs(domega - domega2)))
