"""Classical weak simulation of period-finding, Grover and tractable circuits."""

__version__ = "0.1.0"
