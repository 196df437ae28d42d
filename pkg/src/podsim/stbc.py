"""Inner space-time block designs and their precoded assembly.

All code matrices Z are m x t (antenna rows, time columns) and the receive
model is y = Z^H h + n. Real orthogonal designs satisfy

    Z Z^T = (z1^2 + ... + zq^2) I_m,

so codeword differences are orthogonal for any symbol error. The 4x4
rate-one real design used throughout is

        [ z1 -z2 -z3 -z4 ]
    Z = [ z2  z1  z4 -z3 ]
        [ z3 -z4  z1  z2 ]
        [ z4  z3 -z2  z1 ]

and the 8x8 rate-one real design is its octonion-table analogue. A 6x8
rate-one design for six antennas is obtained by dropping the last two rows
of the 8x8 matrix (any row subset of an orthogonal design stays
orthogonal).

The partly orthogonal construction splits the antennas into an unprecoded
head and a precoded tail: a precoder P (n x n, Frobenius power n) multiplies
the per-column sub-vectors of the last n rows,

    Z_pod = blockdiag(I_{m-n}, P) Z.

For n = 2 on the 4x4 design this precodes the column sub-vectors
(z3, z4), (-z4, z3), (z1, -z2), (z2, z1); for n = 4 it precodes whole
columns.

The quasi-orthogonal 4x4 code stacks two Alamouti blocks so that the ML
metric separates over the symbol pairs (z1, z3) and (z2, z4); full
diversity requires the second symbol of each pair to come from a rotated
alphabet, which the QPSK constellation here applies to z3 and z4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Constellation",
    "InnerDesign",
    "PodStructure",
    "assemble",
    "design_kinds",
    "get_design",
    "gray_code",
    "slot_alphabets",
    "worst_case_distance",
]


def _od2(z):
    z1, z2 = z
    return np.array([[z1, -z2], [z2, z1]], dtype=complex)


def _od4(z):
    z1, z2, z3, z4 = z
    return np.array(
        [
            [z1, -z2, -z3, -z4],
            [z2, z1, z4, -z3],
            [z3, -z4, z1, z2],
            [z4, z3, -z2, z1],
        ],
        dtype=complex,
    )


def _od8(z):
    z1, z2, z3, z4, z5, z6, z7, z8 = z
    # Antenna rows = columns of the standard time-indexed 8x8 table.
    time_rows = np.array(
        [
            [z1, z2, z3, z4, z5, z6, z7, z8],
            [-z2, z1, z4, -z3, z6, -z5, -z8, z7],
            [-z3, -z4, z1, z2, z7, z8, -z5, -z6],
            [-z4, z3, -z2, z1, z8, -z7, z6, -z5],
            [-z5, -z6, -z7, -z8, z1, z2, z3, z4],
            [-z6, z5, -z8, z7, -z2, z1, -z4, z3],
            [-z7, z8, z5, -z6, -z3, z4, z1, -z2],
            [-z8, -z7, z6, z5, -z4, -z3, z2, z1],
        ],
        dtype=complex,
    )
    return time_rows.T


def _od6x8(z):
    return _od8(z)[:6, :]


def _alamouti(z):
    z1, z2 = z
    return np.array([[z1, -np.conj(z2)], [z2, np.conj(z1)]], dtype=complex)


def _qostbc4(z):
    z1, z2, z3, z4 = z
    c = np.conj
    # Two stacked Alamouti blocks, slot order chosen so the ML metric
    # separates over the pairs (z1, z3) and (z2, z4).
    time_rows = np.array(
        [
            [z1, z2, z4, z3],
            [-c(z2), c(z1), -c(z3), c(z4)],
            [-c(z4), -c(z3), c(z1), c(z2)],
            [z3, -z4, -z2, z1],
        ],
        dtype=complex,
    )
    return time_rows.conj().T


@dataclass(frozen=True)
class InnerDesign:
    """One inner block design: kind name, shape, and symbol layout.

    rotated_slots lists the symbol positions that take the rotated alphabet
    when a rotated constellation is used (quasi-orthogonal designs only).
    """

    kind: str
    m: int
    t: int
    n_sym: int
    is_real: bool
    rotated_slots: tuple[int, ...] = ()
    builder: callable = field(default=None, repr=False, compare=False)

    def build(self, symbols) -> np.ndarray:
        """Evaluate the design at a symbol vector, returning an m x t matrix."""
        z = np.asarray(symbols)
        if z.shape != (self.n_sym,):
            raise ValueError(f"{self.kind} needs {self.n_sym} symbols, got shape {z.shape}")
        if self.is_real:
            if np.iscomplexobj(z) and np.abs(z.imag).max() > 1e-12:
                raise ValueError(f"{self.kind} is a real design; symbols must be real")
            z = z.real.astype(float)
        return self.builder(z)

    def coefficient_tensors(self) -> tuple[np.ndarray, np.ndarray]:
        """Tensors (A, B) with Z(z) = sum_k z_k A_k + conj(z_k) B_k.

        Probed from the builder at unit and imaginary-unit symbol vectors;
        real designs get B = 0.
        """
        a = np.zeros((self.n_sym, self.m, self.t), dtype=complex)
        b = np.zeros_like(a)
        for k in range(self.n_sym):
            e = np.zeros(self.n_sym, dtype=complex)
            e[k] = 1.0
            z_real = self.builder(e.real) if self.is_real else self.builder(e)
            if self.is_real:
                a[k] = z_real
                continue
            z_imag = self.builder(1j * e)
            a[k] = (z_real - 1j * z_imag) / 2.0
            b[k] = (z_real + 1j * z_imag) / 2.0
        return a, b


_REGISTRY = {
    "real-od-2": InnerDesign("real-od-2", m=2, t=2, n_sym=2, is_real=True, builder=_od2),
    "real-od-4": InnerDesign("real-od-4", m=4, t=4, n_sym=4, is_real=True, builder=_od4),
    "real-od-8": InnerDesign("real-od-8", m=8, t=8, n_sym=8, is_real=True, builder=_od8),
    "real-od-6x8": InnerDesign("real-od-6x8", m=6, t=8, n_sym=8, is_real=True, builder=_od6x8),
    "alamouti": InnerDesign("alamouti", m=2, t=2, n_sym=2, is_real=False, builder=_alamouti),
    "qostbc-4": InnerDesign(
        "qostbc-4", m=4, t=4, n_sym=4, is_real=False, rotated_slots=(2, 3), builder=_qostbc4
    ),
}


def design_kinds() -> list[str]:
    return sorted(_REGISTRY)


def get_design(kind: str) -> InnerDesign:
    try:
        return _REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown design kind {kind!r}; choose from {design_kinds()}") from None


@dataclass(frozen=True)
class PodStructure:
    """Inner design plus the size n of the precoded antenna tail."""

    inner: InnerDesign
    n: int

    def __post_init__(self) -> None:
        if not 1 <= self.n <= self.inner.m:
            raise ValueError(f"precoded tail must satisfy 1 <= n <= {self.inner.m}, got {self.n}")

    @property
    def m(self) -> int:
        return self.inner.m

    @property
    def t(self) -> int:
        return self.inner.t

    @property
    def precoded_rows(self) -> range:
        return range(self.inner.m - self.n, self.inner.m)


def assemble(pod: PodStructure, precoder: np.ndarray, symbols) -> np.ndarray:
    """Precoded codeword: identity on the head rows, P on the tail rows.

    The precoder must be n x n with Frobenius power n (tolerance 1e-6).
    """
    p = np.asarray(precoder, dtype=complex)
    if p.shape != (pod.n, pod.n):
        raise ValueError(f"precoder must be {pod.n} x {pod.n}, got {p.shape}")
    power = float(np.sum(np.abs(p) ** 2))
    if abs(power - pod.n) > 1e-6:
        raise ValueError(f"precoder power {power:.8f} differs from required {pod.n}")
    z = pod.inner.build(symbols)
    out = z.copy()
    out[pod.inner.m - pod.n :, :] = p @ z[pod.inner.m - pod.n :, :]
    return out


def gray_code(k: int) -> int:
    return k ^ (k >> 1)


@dataclass(frozen=True)
class Constellation:
    """Symbol alphabet: 'bpsk' is {+1, -1}; 'qpsk-rot' is unit-magnitude
    QPSK with Gray labels, where a design's rotated slots take the alphabet
    multiplied by exp(i * rotation)."""

    kind: str
    rotation: float = np.pi / 4

    def __post_init__(self) -> None:
        if self.kind not in ("bpsk", "qpsk-rot"):
            raise ValueError(f"unknown constellation kind {self.kind!r}")

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self.kind == "bpsk" else 2

    def base_alphabet(self) -> np.ndarray:
        if self.kind == "bpsk":
            return np.array([1.0, -1.0], dtype=complex)
        # Index k carries Gray label gray_code(k); neighbours differ in one bit.
        return np.exp(1j * np.pi / 2 * np.arange(4))


def slot_alphabets(design: InnerDesign, constellation: Constellation) -> list[np.ndarray]:
    """Per-slot alphabets for one block of the design."""
    if design.is_real and constellation.kind != "bpsk":
        raise ValueError(f"{design.kind} carries real symbols; use the bpsk constellation")
    base = constellation.base_alphabet()
    rotated = base * np.exp(1j * constellation.rotation)
    out = []
    for slot in range(design.n_sym):
        if constellation.kind == "qpsk-rot" and slot in design.rotated_slots:
            out.append(rotated)
        else:
            out.append(base)
    return out


def worst_case_distance(pod: PodStructure, constellation: Constellation) -> float:
    """Minimum of sum_k |z_k - z'_k|^2 over distinct symbol vectors.

    Per-slot distances add, so the minimum is a single-slot nearest
    neighbour distance.
    """
    best = np.inf
    for alphabet in slot_alphabets(pod.inner, constellation):
        diff = np.abs(alphabet[:, None] - alphabet[None, :]) ** 2
        np.fill_diagonal(diff, np.inf)
        best = min(best, float(diff.min()))
    return best
