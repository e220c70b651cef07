"""Two spins: a pointer in superposition, and an environment that reads the wrong basis."""
import numpy as np

from prefbasis.decoherence import demo_einselection_pathology, demo_pointer_superposition, singlet_identity

res, phase = singlet_identity()
print(f"x-form vs z-form of the singlet: residual {res:.1e}, global phase {phase.real:+.0f}")

rep = demo_pointer_superposition(env_overlap=0.3)
print("\npointer demo")
print("  Schmidt coefficients:", np.round(rep.schmidt_coeffs, 12), "degenerate:", rep.schmidt_degenerate)
print("  x form residual:", rep.x_form_residual, " z form residual:", rep.z_form_residual)
print("  with an environment (<e+|e-> = 0.3):", rep.n_clusters, "clusters at", rep.cluster_directions)
print("  apparatus family vs pointer basis:", rep.a_family_match_pointer)
print("  apparatus family vs up/down basis:", rep.a_family_match_superposition)

for basis in ("z", "x"):
    p = demo_einselection_pathology(basis)
    print(f"\nenvironment coupled to spin 2 in the {basis} basis")
    print(f"  |r| = {p.abs_r:.4f} at t = {p.t_decohered:.3f}")
    print("  spin-1 reduced state:\n", np.round(p.spin1_reduced, 9))
    print("  fidelity with the prepared |z->:", round(p.fidelity_prepared, 9))
    for lab, prob, fid in zip(p.record_labels, p.record_probabilities, p.conditional_fidelity_prepared):
        print(f"  record {lab}: probability {prob:.3f}, fidelity with |z-> given record {fid:.3f}")
