"""Multi-agent multi-objective RL laboratory: global-preference and agent-attention learners."""

__version__ = "0.1.0"
