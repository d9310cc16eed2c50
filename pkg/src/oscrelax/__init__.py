"""Indirect relaxation of a non-resonantly coupled oscillator.

Symbolic averaging of anti-rotating terms, closed-form effective
parameters, a Lindblad simulator for the resulting kinetic equation, and an
exact Gaussian-moment oracle for the full quadratic model.
"""

__version__ = "0.1.0"
