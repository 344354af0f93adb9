#!/usr/bin/env python3
"""Reference Adam trajectory for the optimizer test.

Runs torch.optim.Adam in float64 on a 2x2 tensor with a fixed gradient
schedule and prints the parameter values after each of 5 steps, to be
frozen into tests/training_test.cpp.
"""
import torch

param = torch.tensor([[0.5, -0.3], [0.1, 0.9]], dtype=torch.float64, requires_grad=True)
opt = torch.optim.Adam([param], lr=1e-3, betas=(0.9, 0.999), eps=1e-8)

for step in range(1, 6):
    grads = torch.tensor(
        [[0.1 * step, -0.2], [0.05 * step * step, 0.4 - 0.1 * step]], dtype=torch.float64
    )
    opt.zero_grad()
    param.grad = grads
    opt.step()
    flat = param.detach().flatten().tolist()
    print("{" + ", ".join(f"{v:.15g}" for v in flat) + "},")
