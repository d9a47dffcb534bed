"""Statistical ensembles of particles in three descriptions: trajectory samples,
Clebsch-potential hydrodynamics and wave functions."""

__version__ = "0.1.0"
