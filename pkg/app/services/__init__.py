# Computational services: geometry, complexes, measures, forms, cycles and valuations
