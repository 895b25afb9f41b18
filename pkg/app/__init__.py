"""
Polyhedral valuation laboratory: exact polytopes, cell complexes, measures and valuations.
"""
