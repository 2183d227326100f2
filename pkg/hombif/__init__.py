"""
Numerical detection and continuation of homoclinic bifurcations in
nonautonomous Caratheodory equations.
"""

__version__ = '0.3'
