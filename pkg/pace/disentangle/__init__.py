"""
Mutual-information minimization between frame and prosody embeddings.
"""
from pace.disentangle.club import (
    ClubEstimator,
    club_bound,
    fit_q_step,
    frame_batch,
    mi_loss,
    sample_frames,
)

__all__ = ["ClubEstimator", "club_bound", "fit_q_step", "frame_batch", "mi_loss", "sample_frames"]
