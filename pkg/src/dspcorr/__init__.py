"""Time-varying correlation estimation with dynamic shrinkage and factor stochastic volatility."""
