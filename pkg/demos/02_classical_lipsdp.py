# Product of norms vs LipSDP vs a sampled lower bound on small ReLU nets.
import numpy as np

from hybridlip.classical import random_dense_net, lip_product, lip_sdp, lip_empirical

for seed in range(5):
    net = random_dense_net([4, 8, 3], seed, act="relu")
    low = lip_empirical(net, 1000, seed).bound
    sdp = lip_sdp(net)
    prod = lip_product(net).bound
    print(f"seed {seed}: sampled {low:.4f} <= sdp {sdp.bound:.4f} <= product {prod:.4f}"
          f"  (bisection steps {sdp.iterations})")

# The diagonal multiplier found for the last net
print("T =", np.round(sdp.multipliers[0], 4))
