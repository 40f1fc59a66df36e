"""2-D TM scattering from inhomogeneous cylinders.

Two interchangeable potential operators drive the same Bi-CGSTAB solver:
a polar-grid operator built from one-dimensional angular FFTs and
precomputed ring integrals, and a Cartesian operator using zero-padded
two-dimensional FFT convolution.
"""

__version__ = "0.1.0"
