"""Width asymptotics of correlation functions of deep fully-connected networks."""

__version__ = "0.1.0"
