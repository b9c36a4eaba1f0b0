"""Scalar-field models used as simulation ground truth.

Each field maps R^3 to positive reals with a unique maximum at `source`.
The simulator samples values at agent positions; the analytic gradient
exists for diagnostics and tests only and is never fed to controllers.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k

KINDS = ("gaussian", "quadratic", "sum_of_gaussians")

_KIND_CODE = {
    "gaussian": _k.FIELD_GAUSSIAN,
    "quadratic": _k.FIELD_QUADRATIC,
    "sum_of_gaussians": _k.FIELD_SUM_GAUSSIANS,
}


def _width_matrix(width) -> np.ndarray:
    """Accept scalar w, per-axis (3,) widths, or a full SPD matrix."""
    w = np.asarray(width, dtype=np.float64)
    if w.ndim == 0:
        m = np.eye(3) * float(w) ** 2
    elif w.shape == (3,):
        m = np.diag(w**2)
    elif w.shape == (3, 3):
        m = 0.5 * (w + w.T)
    else:
        raise ValueError("width must be a scalar, (3,) or (3, 3)")
    if np.min(np.linalg.eigvalsh(m)) <= 0:
        raise ValueError("width matrix must be positive definite")
    return m


@dataclass(frozen=True)
class FieldSpec:
    """One scalar field: kind, source location, and shape parameters.

    gaussian:          amplitude * exp(-1/2 d^T W^-1 d), W the width matrix
    quadratic:         amplitude - d^T Q d, positive for ||d|| <= domain_radius
    sum_of_gaussians:  sum of gaussian components; unique max at `source`
                       is checked numerically on a coarse grid
    """

    kind: str
    source: np.ndarray
    amplitude: float = 1.0
    width: np.ndarray = None  # type: ignore[assignment]
    curvature: np.ndarray = None  # type: ignore[assignment]
    domain_radius: float = 0.0
    components: tuple = ()
    _params: tuple = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        src = np.ascontiguousarray(self.source, dtype=np.float64)
        if src.shape != (3,) or not np.all(np.isfinite(src)):
            raise ValueError("source must be a finite 3-vector")
        object.__setattr__(self, "source", src)

        if self.kind == "gaussian":
            if self.amplitude <= 0:
                raise ValueError("amplitude must be positive")
            w = _width_matrix(self.width if self.width is not None else 1.0)
            object.__setattr__(self, "width", w)
            sources = src[None, :].copy()
            amps = np.array([float(self.amplitude)])
            mats = np.linalg.inv(w)[None, :, :].copy()
        elif self.kind == "quadratic":
            q = np.asarray(
                self.curvature if self.curvature is not None else np.eye(3),
                dtype=np.float64,
            )
            if q.shape == (3,):
                q = np.diag(q)
            q = 0.5 * (q + q.T)
            if np.min(np.linalg.eigvalsh(q)) <= 0:
                raise ValueError("curvature matrix must be positive definite")
            if self.domain_radius <= 0:
                raise ValueError("quadratic kind needs a positive domain_radius")
            lam_max = float(np.max(np.linalg.eigvalsh(q)))
            if self.amplitude - lam_max * self.domain_radius**2 <= 0:
                raise ValueError(
                    "amplitude too small: field not positive on the declared domain"
                )
            object.__setattr__(self, "curvature", q)
            sources = src[None, :].copy()
            amps = np.array([float(self.amplitude)])
            mats = q[None, :, :].copy()
        else:  # sum_of_gaussians
            if not self.components:
                raise ValueError("sum_of_gaussians needs at least one component")
            rows, amps_l, mats_l = [], [], []
            for comp in self.components:
                c_src = np.asarray(comp["source"], dtype=np.float64)
                c_amp = float(comp["amplitude"])
                if c_amp <= 0:
                    raise ValueError("component amplitudes must be positive")
                c_w = _width_matrix(comp.get("width", 1.0))
                rows.append(c_src)
                amps_l.append(c_amp)
                mats_l.append(np.linalg.inv(c_w))
            sources = np.ascontiguousarray(rows)
            amps = np.asarray(amps_l)
            mats = np.ascontiguousarray(mats_l)

        kind_code = _KIND_CODE[self.kind]
        object.__setattr__(
            self, "_params", (kind_code, sources, amps, mats, src.copy())
        )
        if self.kind == "sum_of_gaussians":
            _check_unique_max(self)

    def kernel_params(self) -> tuple:
        """(kind_code, sources, amplitudes, matrices, main_source)."""
        return self._params


def _check_unique_max(spec: FieldSpec):
    """Coarse-grid check that `source` is the single dominant peak.

    Two conditions at grid granularity: no grid point farther than one
    grid cell from the source may beat its value, and from every such
    point the gradient must point toward the source. Catches secondary
    peaks and misplaced source declarations; sub-cell peak offsets (the
    exact optimum of a gaussian mixture rarely sits on a component
    center) are accepted.
    """
    kind, sources, amps, mats, main = spec.kernel_params()
    peak = _k.field_value(kind, sources, amps, mats, main)
    lo = sources.min(axis=0)
    hi = sources.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    lo, hi = lo - 0.5 * span, hi + 0.5 * span
    axes = [np.linspace(lo[a], hi[a], 7) for a in range(3)]
    cell = float(np.max((hi - lo) / 6.0))
    for px in axes[0]:
        for py in axes[1]:
            for pz in axes[2]:
                p = np.array([px, py, pz])
                d = main - p
                if np.linalg.norm(d) <= cell:
                    continue
                if _k.field_value(kind, sources, amps, mats, p) >= peak:
                    raise ValueError(
                        "field value at a grid point beats the declared source "
                        f"(at {p.tolist()})"
                    )
                g = _k.field_gradient(kind, sources, amps, mats, p)
                if float(g @ d) <= 0.0 and np.linalg.norm(g) > 1e-12 * peak:
                    raise ValueError(
                        "field is not single-peaked toward the declared source "
                        f"(ascent check failed at {p.tolist()})"
                    )


def field_eval(spec: FieldSpec, p) -> float:
    p = np.ascontiguousarray(p, dtype=np.float64)
    kind, sources, amps, mats, _ = spec.kernel_params()
    return float(_k.field_value(kind, sources, amps, mats, p))


def field_gradient(spec: FieldSpec, p) -> np.ndarray:
    p = np.ascontiguousarray(p, dtype=np.float64)
    kind, sources, amps, mats, _ = spec.kernel_params()
    return _k.field_gradient(kind, sources, amps, mats, p)
