"""
Numerical core - exterior calculus, Toda chain, periodic field toolkit, PDE models
"""
