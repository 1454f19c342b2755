"""
Tests for distributed AIA.

This package contains unit and integration tests for:
- Belief fusion and the distributed Kalman filter
- Tree building, biased sampling and plan extraction
- The centralized baseline
- CLI interface and end-to-end workflows
"""
