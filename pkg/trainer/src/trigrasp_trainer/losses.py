"""Training objective for the three prediction heads.

Confidence is a per-pixel two-class problem (softmax cross-entropy).
The angle is multi-label (a pixel may admit several grasp directions),
so each bin gets an independent sigmoid cross-entropy.  Width is a
regression on the sigmoid-activated head output (mean squared error).

Labels zero the angle and width planes outside grasp regions, so by
default those pixels are masked out of the angle and width terms;
``mask_background=False`` trains them toward zero instead.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def grasp_loss(
    outputs: dict[str, torch.Tensor],
    conf_target: torch.Tensor,   # (B, H, W) in {0, 1}
    angle_target: torch.Tensor,  # (B, k, H, W) multi-hot
    width_target: torch.Tensor,  # (B, H, W) in [0, 1)
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
    mask_background: bool = True,
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Weighted total plus per-term components (all scalars)."""
    conf_logits, angle_logits, width_logits = (
        outputs["conf"], outputs["angle"], outputs["width"])
    if conf_logits.shape[-2:] != conf_target.shape[-2:]:
        raise ValueError(
            f"prediction {tuple(conf_logits.shape[-2:])} vs "
            f"label {tuple(conf_target.shape[-2:])} size mismatch"
        )

    conf_term = F.cross_entropy(conf_logits, conf_target.long())

    graspable = conf_target > 0.5
    if mask_background:
        if graspable.any():
            mask = graspable.unsqueeze(1).expand_as(angle_logits)
            angle_term = F.binary_cross_entropy_with_logits(
                angle_logits[mask], angle_target[mask])
            width_term = F.mse_loss(
                torch.sigmoid(width_logits[graspable]), width_target[graspable])
        else:
            angle_term = angle_logits.sum() * 0.0
            width_term = width_logits.sum() * 0.0
    else:
        angle_term = F.binary_cross_entropy_with_logits(angle_logits, angle_target)
        width_term = F.mse_loss(torch.sigmoid(width_logits), width_target)

    wc, wa, ww = weights
    total = wc * conf_term + wa * angle_term + ww * width_term
    return total, {"confidence": conf_term, "angle": angle_term, "width": width_term}
