# A dense -> quantum -> dense model and its certified bound, hop by hop.
import json

import numpy as np

from hybridlip.hybrid import random_hybrid_model, hybrid_forward, hybrid_lip_bound, hybrid_lip_lower

m = random_hybrid_model(seed=3, in_dim=3, qubits=2)
x = np.array([0.3, 1.2, 2.5])
print("f(x) =", hybrid_forward(m, x))

rep = hybrid_lip_bound(m, "l2")
for b in rep.per_block:
    print(f"block {b.block} {b.stage:8s} {b.in_tag!s:>15} -> {b.out_tag!s:<15} {b.constant:.4f} ({b.method})")
for cv in rep.conversions:
    print(f"block {cv.block} convert  {cv.in_tag!s:>15} -> {cv.out_tag!s:<15} {cv.factor:.4f}")
print(f"certified total {rep.total:.4f}")
print(f"sampled lower   {hybrid_lip_lower(m, 2000, seed=0):.4f}")

with open("models/hybrid_small.json", "w") as f:
    json.dump(m.to_json(), f, indent=1)
