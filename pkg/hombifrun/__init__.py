"""
Command-line runner of the hombif library: configuration, commands and
artifact files.
"""
