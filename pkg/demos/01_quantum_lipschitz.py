# How much can a measured circuit amplify the distance between two states?
# Three answers: exact (sign patterns), projected subgradient, and sampling.
import numpy as np

from hybridlip.quantum import CircuitSpec, Gate, Povm, random_circuit, measure_probs, random_pure_state
from hybridlip.quantum import total_variation, trace_distance
from hybridlip.qlip import lipschitz_exact, lipschitz_subgradient, lipschitz_sampling

# The identity circuit with a full basis measurement is as sensitive as possible.
ident = CircuitSpec(1, (), Povm.computational(1))
print("identity, computational POVM:", lipschitz_exact(ident).k_star)

# Lumping every outcome together makes the output constant.
lumped = CircuitSpec(2, (Gate("h", 0),), Povm.computational(2, 1))
print("single outcome:", lipschitz_exact(lumped).k_star)

# A random 3-qubit circuit with 4 coarse-grained outcomes.
c = random_circuit(3, 12, seed=5, outcomes=4)
exact = lipschitz_exact(c)
sub = lipschitz_subgradient(c, seed=0)
smp = lipschitz_sampling(c, pairs=10_000, seed=0)
print(f"exact {exact.k_star:.6f}  subgradient {sub.k_star:.6f}  sampling {smp.k_star:.6f}")

# The exact route also hands back the pair of states that attains the constant.
print("witness ratio:", exact.witness_ratio(c))

# Measurement never increases distinguishability.
rho, sigma = random_pure_state(8, 1), random_pure_state(8, 2)
tv = total_variation(measure_probs(c, rho), measure_probs(c, sigma))
print(f"TV {tv:.4f} <= K* x D = {exact.k_star * trace_distance(rho, sigma):.4f} <= D = {trace_distance(rho, sigma):.4f}")
