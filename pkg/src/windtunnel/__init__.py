"""Wind-tunnel harness for data pipelines.

Synthesizes schema-constrained load, delivers it open-loop at controlled
rates, collects per-stage span telemetry and prorated costs, fits a small
performance-and-cost twin from an experiment, and simulates that twin
under projected year-long traffic to answer cost/SLO what-if questions.
"""

__version__ = "0.1.0"
