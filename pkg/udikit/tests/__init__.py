"""
Test module
"""
