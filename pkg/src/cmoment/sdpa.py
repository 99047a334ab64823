"""Sparse SDPA text export/import for the real models.

The file encodes   min c.x  s.t.  sum_i x_i F_i - F0  psd   per block.
Our blocks are stored as F0_ours + sum x_i F_i psd, so F0 flips sign on
the way out and back.  Blocks of dimension one are collected into a single
trailing diagonal block together with the equality rows, each equality
split into a pair of opposing inequalities; a JSON sidecar records the
layout, the variable metadata and the objective constant so a reader can
rebuild the exact original model.
"""

from __future__ import annotations

import json

import numpy as np

from .relax import RealBlock, RealSDP


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def export_sdpa(sdp: RealSDP, path: str, sidecar_path: str | None = None,
                comment: str = "cmoment export") -> str:
    """Write the model; returns the sidecar path."""
    if sidecar_path is None:
        sidecar_path = path + ".json"

    psd_idx = [i for i, b in enumerate(sdp.blocks) if b.dim > 1]
    diag_layout: list = [["blk", i] for i, b in enumerate(sdp.blocks) if b.dim == 1]
    for r in range(len(sdp.eq_rows)):
        diag_layout.append(["eq", r, "+"])
        diag_layout.append(["eq", r, "-"])

    sizes = [sdp.blocks[i].dim for i in psd_idx]
    if diag_layout:
        sizes.append(-len(diag_layout))

    # entries[(mat, blk, i, j)] = value, 1-based indices, upper triangle
    entries: dict[tuple[int, int, int, int], float] = {}

    def put(mat: int, blk: int, i: int, j: int, v: float) -> None:
        if v == 0.0:
            return
        key = (mat, blk, i + 1, j + 1)
        entries[key] = entries.get(key, 0.0) + v

    for out_b, orig in enumerate(psd_idx):
        blk = sdp.blocks[orig]
        for (i, j), v in blk.f0.items():
            put(0, out_b + 1, i, j, -v)      # F0_sdpa = -F0_ours
        for var, mat in blk.mats.items():
            for (i, j), v in mat.items():
                put(var + 1, out_b + 1, i, j, v)
    if diag_layout:
        dblk = len(psd_idx) + 1
        for pos, item in enumerate(diag_layout):
            if item[0] == "blk":
                blk = sdp.blocks[item[1]]
                put(0, dblk, pos, pos, -blk.f0.get((0, 0), 0.0))
                for var, mat in blk.mats.items():
                    put(var + 1, dblk, pos, pos, mat.get((0, 0), 0.0))
            else:
                _, r, sign = item
                s = 1.0 if sign == "+" else -1.0
                # a.x >= b  /  -a.x >= -b
                put(0, dblk, pos, pos, s * sdp.eq_rhs[r])
                for var, v in sdp.eq_rows[r].items():
                    put(var + 1, dblk, pos, pos, s * v)

    lines = [f'"{comment}"']
    lines.append(f"{sdp.nvar} = mDIM")
    lines.append(f"{len(sizes)} = nBLOCK")
    lines.append("(" + ", ".join(str(s) for s in sizes) + ") = bLOCKsTRUCT")
    lines.append(" ".join(_fmt(v) for v in sdp.c))
    for (mat, blk, i, j) in sorted(entries):
        lines.append(f"{mat} {blk} {i} {j} {_fmt(entries[(mat, blk, i, j)])}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")

    sidecar = {
        "nvar": sdp.nvar,
        "obj_const": sdp.obj_const,
        "var_meta": [list(m) if not isinstance(m, str) else m for m in sdp.var_meta],
        "psd_blocks": psd_idx,
        "block_labels": [b.label for b in sdp.blocks],
        "block_dims": [b.dim for b in sdp.blocks],
        "diag_layout": diag_layout,
        "n_eq": len(sdp.eq_rows),
        "labels": sdp.labels,
    }
    with open(sidecar_path, "w") as f:
        json.dump(sidecar, f, indent=1)
        f.write("\n")
    return sidecar_path


def _tokenize_struct(line: str) -> list[int]:
    cleaned = line.split("=")[0]
    for ch in "(){},":
        cleaned = cleaned.replace(ch, " ")
    return [int(float(t)) for t in cleaned.split()]


def import_sdpa(path: str, sidecar_path: str | None = None) -> RealSDP:
    """Rebuild a RealSDP from an exported file and its sidecar."""
    if sidecar_path is None:
        sidecar_path = path + ".json"
    with open(sidecar_path) as f:
        side = json.load(f)
    with open(path) as f:
        raw = [ln.strip() for ln in f
               if ln.strip() and not ln.lstrip().startswith(("*", '"'))]

    nvar = int(raw[0].split("=")[0])
    nblock = int(raw[1].split("=")[0])
    sizes = _tokenize_struct(raw[2])
    if len(sizes) != nblock:
        raise ValueError("block structure line disagrees with block count")
    c = np.array([float(t) for t in raw[3].replace(",", " ").split()])
    if len(c) != nvar:
        raise ValueError("objective length disagrees with mDIM")

    entry_rows = []
    for ln in raw[4:]:
        t = ln.replace(",", " ").split()
        entry_rows.append((int(t[0]), int(t[1]), int(t[2]), int(t[3]), float(t[4])))

    psd_idx = list(side["psd_blocks"])
    dims = side["block_dims"]
    labels = side["block_labels"]
    n_orig_blocks = len(dims)
    blocks = [RealBlock(dims[i], {}, {}, labels[i]) for i in range(n_orig_blocks)]
    diag_layout = side["diag_layout"]
    eq_rows: list[dict[int, float]] = [{} for _ in range(side["n_eq"])]
    eq_rhs = [0.0] * side["n_eq"]

    diag_block_no = len(psd_idx) + 1
    for mat, blk, i, j, v in entry_rows:
        if blk <= len(psd_idx):
            orig = psd_idx[blk - 1]
            tgt = blocks[orig]
            key = (i - 1, j - 1) if i <= j else (j - 1, i - 1)
            if mat == 0:
                tgt.f0[key] = tgt.f0.get(key, 0.0) - v
            else:
                m = tgt.mats.setdefault(mat - 1, {})
                m[key] = m.get(key, 0.0) + v
        elif blk == diag_block_no:
            if i != j:
                raise ValueError("off-diagonal entry in diagonal block")
            item = diag_layout[i - 1]
            if item[0] == "blk":
                tgt = blocks[item[1]]
                if mat == 0:
                    tgt.f0[(0, 0)] = tgt.f0.get((0, 0), 0.0) - v
                else:
                    m = tgt.mats.setdefault(mat - 1, {})
                    m[(0, 0)] = m.get((0, 0), 0.0) + v
            else:
                _, r, sign = item
                if sign != "+":
                    continue  # the "-" row mirrors the "+" row
                if mat == 0:
                    eq_rhs[r] = v
                else:
                    eq_rows[r][mat - 1] = v
        else:
            raise ValueError(f"entry references unknown block {blk}")

    def meta_tuple(m):
        if m[0] in ("re", "im"):
            return (m[0], tuple(m[1]), tuple(m[2]))
        return (m[0], m[1])

    var_meta = [meta_tuple(m) for m in side["var_meta"]]
    return RealSDP(nvar=nvar, c=c, obj_const=float(side["obj_const"]),
                   blocks=blocks, eq_rows=eq_rows, eq_rhs=eq_rhs,
                   var_meta=var_meta, labels=dict(side.get("labels", {})))
