"""Fidelity terms, their proximity operators and the total energy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .grid import total_variation


class Variant(enum.IntEnum):
    # integer codes are shared with the compiled kernels
    RofL2 = 0
    TvL1 = 1
    InpaintL2 = 2
    InpaintL1 = 3
    Segmentation = 4

    @property
    def needs_mask(self) -> bool:
        return self in (Variant.InpaintL2, Variant.InpaintL1)


@dataclass(frozen=True)
class FidelityModel:
    """A fidelity functional ``F`` together with the weight ``alpha``.

    Use the named constructors; they enforce the per-variant invariants
    (``f = 0`` on the inpainting domain, ``g`` precomputed for segmentation).
    ``mask`` is true on missing pixels.
    """

    variant: Variant
    alpha: float
    f: np.ndarray
    mask: np.ndarray | None = None
    c1: float | None = None
    c2: float | None = None
    g: np.ndarray | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.variant.needs_mask != (self.mask is not None):
            raise ValueError(f"{self.variant.name}: mask must be given iff the model inpaints")
        if self.mask is not None and self.mask.shape != self.f.shape:
            raise ValueError(f"mask shape {self.mask.shape} differs from image shape {self.f.shape}")
        if self.variant is Variant.Segmentation and self.g is None:
            raise ValueError("segmentation model requires its weight g")

    @classmethod
    def rof(cls, f, alpha: float) -> "FidelityModel":
        return cls(Variant.RofL2, float(alpha), _image(f))

    @classmethod
    def tv_l1(cls, f, alpha: float) -> "FidelityModel":
        return cls(Variant.TvL1, float(alpha), _image(f))

    @classmethod
    def inpaint_l2(cls, f, mask, alpha: float) -> "FidelityModel":
        f, mask = _masked(f, mask)
        return cls(Variant.InpaintL2, float(alpha), f, mask)

    @classmethod
    def inpaint_l1(cls, f, mask, alpha: float) -> "FidelityModel":
        f, mask = _masked(f, mask)
        return cls(Variant.InpaintL1, float(alpha), f, mask)

    @classmethod
    def segmentation(cls, f, alpha: float, c1: float = 0.6, c2: float = 0.1) -> "FidelityModel":
        f = _image(f)
        return cls(Variant.Segmentation, float(alpha), f, c1=float(c1), c2=float(c2),
                   g=segmentation_weight(f, c1, c2))

    @classmethod
    def build(cls, variant, f, alpha: float, mask=None, c1=0.6, c2=0.1) -> "FidelityModel":
        variant = Variant(variant) if not isinstance(variant, str) else Variant[variant]
        if variant is Variant.RofL2:
            return cls.rof(f, alpha)
        if variant is Variant.TvL1:
            return cls.tv_l1(f, alpha)
        if variant is Variant.InpaintL2:
            return cls.inpaint_l2(f, mask, alpha)
        if variant is Variant.InpaintL1:
            return cls.inpaint_l1(f, mask, alpha)
        return cls.segmentation(f, alpha, c1, c2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.f.shape

    @property
    def weight(self) -> np.ndarray:
        """1.0 where the fidelity acts, 0.0 on the inpainting domain."""
        if self.mask is None:
            return np.ones_like(self.f)
        return (~self.mask).astype(float)

    def restrict(self, sub) -> "FidelityModel":
        """The local model ``F_s`` on a :class:`~tvdd.decomposition.Subdomain`."""
        rs, cs = sub.slices
        return replace(
            self,
            f=self.f[rs, cs],
            mask=None if self.mask is None else self.mask[rs, cs],
            g=None if self.g is None else self.g[rs, cs],
        )


def _image(f) -> np.ndarray:
    f = np.array(f, dtype=float)
    if f.ndim != 2:
        raise ValueError(f"expected a 2-d image, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("image contains non-finite values")
    return f


def _masked(f, mask):
    f = _image(f)
    if mask is None:
        raise ValueError("inpainting needs a mask")
    mask = np.asarray(mask).astype(bool)
    if mask.shape != f.shape:
        raise ValueError(f"mask shape {mask.shape} differs from image shape {f.shape}")
    f[mask] = 0.0
    return f, mask


def segmentation_weight(f, c1: float, c2: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return (f - c1) ** 2 - (f - c2) ** 2


def shrink(v, sigma: float, region=None) -> np.ndarray:
    """Soft thresholding by ``sigma`` on ``region`` (everywhere if None)."""
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.maximum(np.abs(v) - sigma, 0.0)
    if region is None:
        return out
    return np.where(region, out, v)


def energy_F(model: FidelityModel, u) -> float:
    """Value of ``F(u)`` (without ``alpha``); ``inf`` off the segmentation box."""
    u = np.asarray(u, dtype=float)
    if u.shape != model.shape:
        raise ValueError(f"image shape {u.shape} does not match model shape {model.shape}")
    r = u - model.f
    v = model.variant
    if v is Variant.RofL2:
        return 0.5 * float(np.vdot(r, r))
    if v is Variant.TvL1:
        return float(np.abs(r).sum())
    if v is Variant.InpaintL2:
        r = r[~model.mask]
        return 0.5 * float(np.vdot(r, r))
    if v is Variant.InpaintL1:
        return float(np.abs(r[~model.mask]).sum())
    if np.any(u < 0.0) or np.any(u > 1.0):
        return float("inf")
    return float(np.vdot(u, model.g))


def energy_F_local(model: FidelityModel, sub, u_s) -> float:
    return energy_F(model.restrict(sub), u_s)


def energy_total(model: FidelityModel, u) -> float:
    return model.alpha * energy_F(model, u) + total_variation(u)


def prox_F(model: FidelityModel, u, sigma: float) -> np.ndarray:
    """``argmin_v F(v) + |v - u|^2 / (2 sigma)``, pixelwise in closed form."""
    if not sigma > 0:
        raise ValueError(f"prox step must be positive, got {sigma}")
    u = np.asarray(u, dtype=float)
    f = model.f
    v = model.variant
    if v is Variant.RofL2:
        return (u + sigma * f) / (1.0 + sigma)
    if v is Variant.TvL1:
        return f + shrink(u - f, sigma)
    if v is Variant.InpaintL2:
        return np.where(model.mask, u, (u + sigma * f) / (1.0 + sigma))
    if v is Variant.InpaintL1:
        return f + shrink(u - f, sigma, ~model.mask)
    return np.clip(u - sigma * model.g, 0.0, 1.0)


def prox_F_local(model: FidelityModel, sub, u_s, sigma: float) -> np.ndarray:
    return prox_F(model.restrict(sub), u_s, sigma)


def threshold(u, level: float = 0.5) -> np.ndarray:
    """Binary image, ties at ``level`` go to 1."""
    return (np.asarray(u) >= level).astype(float)
