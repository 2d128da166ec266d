#!/usr/bin/env python3
"""Reference-segmenter plugin wrapping UniverSeg (optional example).

Speaks the toolkit's file protocol: invoked with a work directory that
contains support/images/NNNN.png, support/labels/NNNN.png and
query/images/NNNN.png (8-bit grayscale, 128x128); writes one 0/255 mask to
out/predictions/NNNN.png per query and exits 0.

Requires `pip install torch universeg pillow numpy`. The toolkit itself does
not depend on this script; any executable honoring the same layout works.
"""

import sys
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from universeg import universeg


def load_dir(path: Path) -> torch.Tensor:
    frames = []
    for png in sorted(path.glob("*.png")):
        arr = np.asarray(Image.open(png).convert("L"), dtype=np.float32)
        frames.append(arr / 255.0)
    if not frames:
        raise SystemExit(f"no PNG frames in {path}")
    return torch.from_numpy(np.stack(frames))[:, None]  # (N, 1, H, W)


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: universeg_plugin.py <workdir>", file=sys.stderr)
        return 2
    workdir = Path(sys.argv[1])

    device = "cuda" if torch.cuda.is_available() else "cpu"
    model = universeg(pretrained=True).to(device).eval()

    support_images = load_dir(workdir / "support" / "images").to(device)
    support_labels = (load_dir(workdir / "support" / "labels") > 0.5).float()
    support_labels = support_labels.to(device)
    queries = load_dir(workdir / "query" / "images").to(device)

    out_dir = workdir / "out" / "predictions"
    out_dir.mkdir(parents=True, exist_ok=True)
    with torch.no_grad():
        for i, query in enumerate(queries):
            logits = model(
                query[None],
                support_images[None],
                support_labels[None],
            )[0, 0]
            mask = (torch.sigmoid(logits) > 0.5).cpu().numpy()
            Image.fromarray((mask * 255).astype(np.uint8)).save(
                out_dir / f"{i:04d}.png"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
