"""Gesture-driven micro-drone control stack.

Subpackages cover the full pipeline: gesture image synthesis and
classification, a lightweight fixed-stem convolutional network, the
confidence-scaled action grid, minimum-jerk trajectory generation, EKF
state estimation, a simulated plant with mission runner, and a ground
control service with streaming telemetry.
"""

__version__ = "0.1.0"
