"""Exact-arithmetic rational homotopy theory engine.

Subpackages:
  exactq   -- rational scalars and sparse linear algebra over Q
  dgcore   -- differential graded vector spaces and homotopy (co)limit models
  dgl      -- differential graded Lie algebras, free Lie machinery
  dgc      -- differential graded cocommutative coalgebras
  quillen  -- the bridge functors C, L, stabilization, spheres
  calculus -- Taylor towers, cross effects, derivatives, jets
  cli      -- command line front end
"""

__version__ = "0.1.0"
