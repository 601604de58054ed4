"""How many simultaneous users a non-orthogonal preamble pool can resolve.

A random complex Gaussian pool with N symbols has full spark N + 1 (every
N-column subset is independent).  With multiple measurement vectors whose
coefficient matrix has full rank, support recovery is possible for up to
N - 1 simultaneous users -- the sharp boundary checked below.  The spark
computation is exact brute force, so pools are kept small.
"""

import numpy as np

from cra import gen_pool, ml_support_search, mmv_identifiable, \
    received_stage1, spark_bruteforce, SparseScene

# spark of small random pools: always n_symbols + 1
for n, L in [(3, 6), (4, 8), (5, 10)]:
    sparks = {spark_bruteforce(gen_pool(n, L, seed=s)) for s in range(20)}
    print(f"{n}x{L} pools: spark always {sorted(sparks)}")

# identifiability boundary for an N-symbol pool with full-rank observations
n = 31
print(f"\nN = {n}: identifiable up to K = "
      f"{max(k for k in range(n + 1) if mmv_identifiable(k, n + 1, k))} users")

# exhaustive ML support recovery on a toy instance
pool = gen_pool(6, 12, seed=3)
scene = SparseScene(support=(2, 7),
                    coefficients=np.array([1.5 + 0j, -1.0 + 0.5j]),
                    noise_var=1e-3)
y = received_stage1(pool, scene, np.random.default_rng(0))
print(f"true support {scene.support}, "
      f"recovered {ml_support_search(pool, y, 2)}")
