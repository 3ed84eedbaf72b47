"""
homlab project package: settings, logging and version for the biphoton toolkit.
"""
