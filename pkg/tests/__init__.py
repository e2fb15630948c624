"""
Test package for sinr-velocity.
"""
