"""
Unit tests for synthamt components.

Testing strategy:
1. Bottom-up: value objects and pure functions first, then the codec,
   matching and gradients, then rendering, training and the command line
2. Tiny float64 models so gradient checks and training runs stay fast
3. Anything that trains for more than a few steps is gated behind
   SYNTHAMT_SLOW_TESTS=1
"""
