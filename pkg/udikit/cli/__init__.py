"""
CLI interface module
"""
