"""
Test suite for the interpretable recidivism toolkit.

This package contains all tests for the system.
"""
