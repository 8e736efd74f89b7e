"""
Tests package for binding-bench.
"""
