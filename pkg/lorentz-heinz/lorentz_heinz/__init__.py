"""Graph hypersurfaces in Lorentz-Minkowski space: geometry, Heinz-type checks and CMC solvers"""
__version__ = "0.1.0"
