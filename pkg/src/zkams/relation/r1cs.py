"""Sparse R1CS shapes and (relaxed) satisfaction checks.

Column layout of Z is (W, x, u): witness first, then public inputs, then the
slack scalar, which plays the role of the constant 1 in a standard instance.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..encoding import digest, encode_int, encode_residues
from ..errors import ParamMismatch


class SparseMatrix:
    """Immutable COO matrix over F_p, rows sorted."""

    def __init__(self, triplets, shape, p):
        trip = sorted((int(r), int(c), int(v) % p) for r, c, v in triplets if int(v) % p)
        self.shape = shape
        self.p = p
        self.rows = np.array([t[0] for t in trip], dtype=np.int64)
        self.cols = np.array([t[1] for t in trip], dtype=np.int64)
        self.vals = np.array([t[2] for t in trip], dtype=object)
        for arr in (self.rows, self.cols, self.vals):
            arr.setflags(write=False)
        if len(trip) and (self.rows.max() >= shape[0] or self.cols.max() >= shape[1]):
            raise ParamMismatch("triplet outside matrix bounds")

    @property
    def nnz(self):
        return len(self.vals)

    def triplets(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    @cached_property
    def centered_vals(self):
        half = self.p // 2
        return np.array([v - self.p if v > half else v for v in self.vals], dtype=object)

    def matvec(self, z):
        """Exact A·z mod p for a sequence of residues z."""
        if len(z) != self.shape[1]:
            raise ParamMismatch(f"vector length {len(z)} != {self.shape[1]}")
        out = np.zeros(self.shape[0], dtype=object)
        if self.nnz:
            z = np.asarray(z, dtype=object)
            prod = self.vals * z[self.cols]
            starts = np.flatnonzero(np.r_[True, self.rows[1:] != self.rows[:-1]])
            out[self.rows[starts]] = np.add.reduceat(prod, starts)
        return [int(v) % self.p for v in out]

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.shape == other.shape
                and self.triplets() == other.triplets())

    def to_bytes(self):
        w = 8
        parts = [encode_int(self.shape[0], w), encode_int(self.shape[1], w)]
        for r, c, v in self.triplets():
            parts.append(encode_int(r, w) + encode_int(c, w) + encode_residues([v], self.p))
        return b"".join(parts)


@dataclass(frozen=True, eq=False)
class R1CSShape:
    A: SparseMatrix
    B: SparseMatrix
    C: SparseMatrix
    num_w: int
    num_x: int
    p: int
    groups: dict = field(default_factory=dict)  # name -> (first row, end row)

    @property
    def m_c(self):
        return self.A.shape[0]

    @property
    def num_z(self):
        return self.num_w + self.num_x + 1

    def __eq__(self, other):
        return isinstance(other, R1CSShape) and self.digest == other.digest

    def __hash__(self):
        return hash(self.digest)

    @cached_property
    def digest(self):
        return digest("zkams/r1cs/shape", encode_int(self.p, 16), encode_int(self.num_w, 8),
                      encode_int(self.num_x, 8), self.A.to_bytes(), self.B.to_bytes(), self.C.to_bytes())

    def z_vector(self, x, u, W):
        if len(W) != self.num_w:
            raise ParamMismatch(f"witness length {len(W)} != {self.num_w}")
        if len(x) != self.num_x:
            raise ParamMismatch(f"public input length {len(x)} != {self.num_x}")
        return [int(v) % self.p for v in W] + [int(v) % self.p for v in x] + [int(u) % self.p]

    def products(self, x, u, W):
        z = self.z_vector(x, u, W)
        return self.A.matvec(z), self.B.matvec(z), self.C.matvec(z)

    def relaxed_residual(self, x, u, W):
        """(AZ)∘(BZ) − u·(CZ): the error vector that makes (x, u, W) satisfied."""
        az, bz, cz = self.products(x, u, W)
        u = int(u) % self.p
        return [(a * b - u * c) % self.p for a, b, c in zip(az, bz, cz)]

    def failing_rows(self, x, u, W, E):
        if len(E) != self.m_c:
            raise ParamMismatch(f"error vector length {len(E)} != {self.m_c}")
        res = self.relaxed_residual(x, u, W)
        return [i for i, (r, e) in enumerate(zip(res, E)) if r != int(e) % self.p]

    def failing_groups(self, x, u, W, E):
        rows = self.failing_rows(x, u, W, E)
        return sorted({name for name, (lo, hi) in self.groups.items() for r in rows if lo <= r < hi})


def make_shape(A, B, C, num_w, num_x, p, m_c=None, groups=None):
    """Build a shape from triplet lists."""
    if m_c is None:
        m_c = 1 + max((r for mat in (A, B, C) for r, _, _ in mat), default=-1)
    dims = (m_c, num_w + num_x + 1)
    return R1CSShape(SparseMatrix(A, dims, p), SparseMatrix(B, dims, p), SparseMatrix(C, dims, p),
                     num_w, num_x, p, dict(groups or {}))


def check_relaxed(shape, x, u, W, E):
    return not shape.failing_rows(x, u, W, E)


def check_r1cs(shape, x, W):
    return check_relaxed(shape, x, 1, W, [0] * shape.m_c)


def export_triplets(shape):
    """Plain-text sparse-triplet format: header, then sections A, B and C."""
    lines = [f"r1cs v1 p={shape.p} m={shape.m_c} w={shape.num_w} x={shape.num_x}"]
    for name, mat in (("A", shape.A), ("B", shape.B), ("C", shape.C)):
        lines.append(f"[{name}]")
        lines.extend(f"{r} {c} {v}" for r, c, v in mat.triplets())
    for name, (lo, hi) in shape.groups.items():
        lines.append(f"# group {name} {lo} {hi}")
    return "\n".join(lines) + "\n"


def import_triplets(text):
    sections = {"A": [], "B": [], "C": []}
    groups = {}
    current = None
    header = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# group"):
            _, _, name, lo, hi = line.split()
            groups[name] = (int(lo), int(hi))
        elif line.startswith("r1cs"):
            header = dict(kv.split("=") for kv in line.split()[2:])
        elif line.startswith("["):
            current = line.strip("[]")
        else:
            r, c, v = line.split()
            sections[current].append((int(r), int(c), int(v)))
    if header is None:
        raise ValueError("missing r1cs header")
    return make_shape(sections["A"], sections["B"], sections["C"], int(header["w"]), int(header["x"]),
                      int(header["p"]), m_c=int(header["m"]), groups=groups)
