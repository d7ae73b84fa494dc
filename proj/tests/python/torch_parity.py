"""Forward parity between the C++ generator and an independent PyTorch model.

Parses LLGW files with numpy only, builds the same network in torch, and
compares outputs on random (6, 32, 32) inputs.

usage: torch_parity.py <llenhance-cli> <forward_dump>
"""

import json
import os
import struct
import subprocess
import sys
import tempfile

import numpy as np
import torch
import torch.nn.functional as F

TOLERANCE = 1e-3


def read_llgw(path):
    with open(path, "rb") as f:
        data = f.read()
    assert data[:4] == b"LLGW", "bad magic"
    version, header_len = struct.unpack_from("<II", data, 4)
    assert version == 1
    header = json.loads(data[12 : 12 + header_len])
    blob = data[12 + header_len :]
    tensors = {}
    for t in header["tensors"]:
        assert t["dtype"] == "f32le"
        count = int(np.prod(t["shape"]))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=t["offset"])
        tensors[t["name"]] = torch.from_numpy(arr.reshape(t["shape"]).copy())
    return header["arch"], tensors


def conv(x, w, prefix, stride=1):
    x = F.pad(x, (1, 1, 1, 1), mode="reflect")
    return F.conv2d(x, w[prefix + ".weight"], w[prefix + ".bias"], stride=stride)


def norm(x, w, prefix):
    return F.instance_norm(x, weight=w[prefix + ".gamma"], bias=w[prefix + ".beta"], eps=1e-5)


def forward(arch, w, x):
    x = x.unsqueeze(0).double()
    w = {k: v.double() for k, v in w.items()}
    for i in range(arch["n_encoder_blocks"]):
        p = f"enc.{i}"
        x = norm(conv(x, w, p + ".conv", stride=2), w, p + ".norm")
        lam = w[p + ".shrink.lambda"].clamp(min=0).view(1, -1, 1, 1)
        x = torch.sign(x) * torch.relu(x.abs() - lam)
    for i in range(arch["n_resnet_blocks"]):
        p = f"res.{i}"
        y = torch.relu(norm(conv(x, w, p + ".conv1"), w, p + ".norm1"))
        x = x + norm(conv(y, w, p + ".conv2"), w, p + ".norm2")
    for i in range(arch["n_decoder_blocks"]):
        p = f"dec.{i}"
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        x = torch.relu(norm(conv(x, w, p + ".conv"), w, p + ".norm"))
    return torch.tanh(conv(x, w, "head.conv"))[0]


def write_tensor(path, t):
    c, h, wd = t.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<III", c, h, wd))
        f.write(t.numpy().astype("<f4").tobytes())


def read_tensor(path):
    with open(path, "rb") as f:
        c, h, wd = struct.unpack("<III", f.read(12))
        return torch.from_numpy(np.frombuffer(f.read(), dtype="<f4").reshape(c, h, wd).copy())


def main():
    cli, dump = sys.argv[1], sys.argv[2]
    worst = 0.0
    with tempfile.TemporaryDirectory() as tmp:
        for seed, (filters, blocks) in enumerate([(8, 2), (16, 3), (64, 9)]):
            weights = os.path.join(tmp, f"w{seed}.llgw")
            subprocess.run([cli, "init-weights", weights, "--base-filters", str(filters),
                            "--resnet-blocks", str(blocks), "--seed", str(seed)], check=True)
            arch, w = read_llgw(weights)
            gen = torch.Generator().manual_seed(seed)
            for _ in range(20 if filters < 64 else 5):
                x = torch.rand((6, 32, 32), generator=gen) * 2 - 1
                write_tensor(os.path.join(tmp, "in.bin"), x)
                subprocess.run([dump, weights, os.path.join(tmp, "in.bin"), os.path.join(tmp, "out.bin")], check=True)
                ours = read_tensor(os.path.join(tmp, "out.bin")).double()
                ref = forward(arch, w, x.float())
                worst = max(worst, (ours - ref).abs().max().item())
    print(f"max abs difference vs torch: {worst:.3g}")
    sys.exit(0 if worst <= TOLERANCE else 1)


if __name__ == "__main__":
    main()
