"""
Biphoton HOM toolkit
Joint spectral amplitudes, symmetry degree, Schmidt analysis and resonance metrology
"""
