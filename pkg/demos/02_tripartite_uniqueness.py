"""Adding a third party removes the ambiguity, as long as its states are not colinear."""
import numpy as np

from prefbasis import states as S
from prefbasis.decomposition import find_tridecomposition, scan_product_conditioning, verify_uniqueness

# equal coefficients, so every two-party cut is degenerate
for overlap in (0.0, 0.5, 0.99, 1.0):
    psi = S.ghz_type(env_overlap=overlap)
    scan = scan_product_conditioning(psi, 0, grid_deg=1.0)
    where = [(round(c.theta_deg, 2), round(c.phi_deg, 2)) for c in scan.clusters[:4]]
    print(f"<e0|e1> = {overlap:4.2f}: {scan.n_clusters:3d} clusters, {len(scan.hits):6d} hits, "
          f"continuum={scan.continuum}  {where if not scan.continuum else ''}")

# the two-cluster case yields one decomposition, and local search finds no other
psi = S.ghz_type(env_overlap=0.5)
dec = find_tridecomposition(psi)
print("\ncoefficients:", np.round(dec.coeffs, 9))
print("s family:\n", np.round(dec.s_vecs, 9))
print("e-family Gram |.|:\n", np.round(np.abs(dec.overlap_report["e"]), 9))
rep = verify_uniqueness(psi, dec, trials=200, seed=0)
print(f"restarts: {rep.converged_to_canonical} back to canonical, {rep.alternatives} alternatives, "
      f"{rep.failed} failed")

# the W state has no such expansion at all
try:
    find_tridecomposition(S.w_state())
except Exception as exc:
    print("\nW state:", type(exc).__name__, "-", exc)
