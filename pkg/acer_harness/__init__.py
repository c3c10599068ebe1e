"""Actor-Critic with Evolving Reward harness
"""

__version__ = "1.0.0"
