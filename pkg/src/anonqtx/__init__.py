"""Simulation and verification of anonymous quantum message transmission.

Modules: ``qsim`` (statevector/density-matrix numerics), ``channels`` (ideal
anonymous classical primitives and quantum channels), ``adversary``
(collusion model), ``protocol`` (teleportation and anonymous EPR generation),
``distill`` (threshold model of one-way distillation), ``analysis``
(detection bounds, Monte Carlo, anonymity tests), ``cli``.
"""
__version__ = "0.1.0"
