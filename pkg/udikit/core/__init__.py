"""
Core processing module
"""
