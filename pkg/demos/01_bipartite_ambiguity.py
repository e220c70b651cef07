"""Two parties are not enough: a Bell state has many Schmidt bases."""
import numpy as np

from prefbasis import states as S
from prefbasis.decomposition import degenerate_alternatives, schmidt
from prefbasis.tensor import random_unitary

bell = S.bell()
sd = schmidt(bell, [0])
print("Schmidt coefficients:", np.round(sd.coeffs, 12))
print("degeneracy groups:   ", sd.degeneracy_groups)
print("left basis (rows):\n", np.round(sd.left_basis, 6))

# rotate inside the degenerate pair: z basis -> x basis
alt = degenerate_alternatives(sd, S.HADAMARD)
print("\nafter a Hadamard rotation:\n", np.round(alt.left_basis, 6))
print("reconstruction residual:", alt.residual(bell))
print("overlaps |<old_i|new_j>|:\n", np.round(np.abs(sd.left_basis.conj() @ alt.left_basis.T), 6))

# any unitary works, the state does not prefer one
rng = np.random.default_rng(0)
worst = max(degenerate_alternatives(sd, random_unitary(2, rng)).residual(bell) for _ in range(100))
print("\nworst residual over 100 random rotations:", worst)

# distinct coefficients pin the basis down
lopsided = schmidt(S.branch_state([0.8, 0.6], [S.Z_PLUS, S.Z_MINUS], [S.Z_PLUS, S.Z_MINUS]), [0])
print("0.8/0.6 state groups:", lopsided.degeneracy_groups, "-> no rotation freedom")
