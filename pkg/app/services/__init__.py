"""Business logic services.

One module per pipeline stage: scenario synthesis, dual-path outlier
estimation, class-agnostic domain separation, joint training, evaluation,
acceptance suite and report rendering.
"""
