"""Polarizing beam splitter: H goes left, V goes right, the splitter recoils."""
from prefbasis.decomposition import scan_product_conditioning
from prefbasis.measurement import simulate_pbs

for label, pol in (("H", (1, 0)), ("V", (0, 1)), ("(H+V)/sqrt2", (1, 1)), ("0.6H+0.8V", (0.6, 0.8))):
    final, rep = simulate_pbs(polarization_input=pol)
    line = (f"{label:>12}: photon <k> = {rep.particle_momentum_after:+.6f}, "
            f"splitter <k> = {rep.magnet_momentum_after:+.6f}, "
            f"total drift = {rep.momentum_after - rep.momentum_before:+.1e}")
    if min(rep.branch_probabilities) > 0:
        line += f", clusters = {scan_product_conditioning(final).n_clusters}"
    print(line)
print("|<a_H|a_V>| =", rep.a_overlap)
