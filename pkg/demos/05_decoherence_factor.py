"""Environment qubits dephase the pointer: decoherence factor and the commutator test."""
import numpy as np

from prefbasis import states as S
from prefbasis.decoherence import (
    EnvironmentModel, brute_force_decoherence_factor, decoherence_factor, run_decoherence,
)
from prefbasis.tensor import Observable

pointer = Observable.from_basis([S.Z_PLUS, S.Z_MINUS], (1.0, -1.0))
times = np.linspace(0, 10, 11)

# one qubit: full recurrence
env1 = EnvironmentModel((1.0,))
print("N=1 |r|:", np.round(np.abs(decoherence_factor(env1, times, pointer)), 4))

# twelve qubits with spread couplings: decay without visible recurrence
rep = run_decoherence()
print("\nN=12 couplings:", np.round(rep.couplings, 3))
print("first t with |r| < 0.01:", rep.first_decohered_time())
print("max |r| after that:", rep.abs_r[rep.times >= rep.first_decohered_time()].max())
print("closed form vs direct evolution:",
      np.abs(rep.r_values - brute_force_decoherence_factor(EnvironmentModel(rep.couplings),
                                                           rep.times, pointer)).max())

# only projectors diagonal in the coupling basis survive the interaction untouched
for name, norm in rep.commutator_norms.items():
    print(f"||[H_ae, {name}]||_F = {norm:.6g}")
