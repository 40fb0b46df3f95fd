"""Toy-scale attention-gated encoder-decoder for per-frame 6-class
segmentation.

Mechanism-faithful rather than capacity-faithful: gated skip connections,
softmax over 6 channels, no normalization layers (so a zero input with
zero biases yields exactly uniform class probabilities).
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .base import N_CLASSES, SegmenterConfig


class ConvBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)

    def forward(self, x):
        x = F.relu(self.conv1(x))
        return F.relu(self.conv2(x))


class AttentionGate(nn.Module):
    """Additive attention: skip features are scaled by a sigmoid map
    computed from the skip and the coarser gating signal."""

    def __init__(self, c_skip: int, c_gate: int, c_mid: int):
        super().__init__()
        self.w_skip = nn.Conv2d(c_skip, c_mid, 1)
        self.w_gate = nn.Conv2d(c_gate, c_mid, 1)
        self.psi = nn.Conv2d(c_mid, 1, 1)

    def forward(self, skip, gate):
        gate = F.interpolate(gate, size=skip.shape[2:], mode="bilinear", align_corners=False)
        alpha = torch.sigmoid(self.psi(F.relu(self.w_skip(skip) + self.w_gate(gate))))
        return skip * alpha


class AttentionUNet(nn.Module):
    def __init__(self, config: SegmenterConfig):
        super().__init__()
        self.config = config
        levels = config.levels
        chans = [config.base_channels * (2**i) for i in range(levels)]

        self.encoders = nn.ModuleList()
        c_prev = 1
        for c in chans:
            self.encoders.append(ConvBlock(c_prev, c))
            c_prev = c

        self.gates = nn.ModuleList()
        self.upconvs = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for i in range(levels - 2, -1, -1):
            c_skip, c_coarse = chans[i], chans[i + 1]
            self.upconvs.append(nn.ConvTranspose2d(c_coarse, c_skip, 2, stride=2))
            if config.attention:
                self.gates.append(AttentionGate(c_skip, c_coarse, max(c_skip // 2, 4)))
            else:
                self.gates.append(None)
            self.decoders.append(ConvBlock(2 * c_skip, c_skip))

        self.head = nn.Conv2d(chans[0], N_CLASSES, 1)
        self.zero_biases()

    def zero_biases(self):
        for m in self.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)) and m.bias is not None:
                nn.init.zeros_(m.bias)

    def forward(self, x):
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = F.max_pool2d(x, 2)
        for up, gate, dec, skip in zip(
            self.upconvs, self.gates, self.decoders, reversed(skips)
        ):
            coarse = x
            x = up(x)
            if x.shape[2:] != skip.shape[2:]:
                x = F.interpolate(x, size=skip.shape[2:], mode="bilinear", align_corners=False)
            gated = gate(skip, coarse) if gate is not None else skip
            x = dec(torch.cat([gated, x], dim=1))
        return self.head(x)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
