"""Stand-alone verification scripts"""
