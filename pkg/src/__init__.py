"""
Distributed AIA - Sampling-based Active Information Acquisition

This package lets teams of simulated robots grow local random trees over
their motion and belief space, fuse covariance beliefs with neighbors through
a distributed Kalman filter, and extract a minimum-uncertainty team plan.
A centralized baseline planner is included for comparison.
"""

__version__ = "0.1.0"
