"""American put pricing by front-fixing with a compact scheme and embedded Runge-Kutta pairs."""

__version__ = "0.1.0"
