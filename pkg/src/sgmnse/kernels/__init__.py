"""Hot pointwise kernels with a compiled (Cython) and a pure-numpy backend.

The compiled backend is preferred when the extension built successfully;
set ``SGMNSE_KERNELS=python`` or ``SGMNSE_KERNELS=cython`` to force one.
Both backends implement the same three operations:

``leray_inplace(c, kt1, kt2, kt3)``
    Apply the mode-wise divergence-free projection I - k k^T / |k|^2 to a
    (3, n1, n2, n3) complex coefficient array; the zero mode is zeroed.

``diffusion_solve_inplace(c, ksq, a)``
    Divide every component mode-wise by (1 + a * |k|^2) (implicit Euler
    diffusion solve with a = nu * dt).

``convect(u, gv)``
    Contract real-space arrays: out[j] = sum_i u[i] * gv[i, j], the
    advective product (u . grad) v on the grid.

``assemble_convective(that, kt1, kt2, kt3, mask)``
    Fused divergence-form assembly: from the 6 unique product spectra
    (u_i u_j)^ build i k . T, project divergence-free and apply the
    dealias mask, all in one pass.  Works on full or half spectra.
"""

import os

__all__ = ["backend_name", "leray_inplace", "diffusion_solve_inplace",
           "convect", "assemble_convective", "hv_norms"]


def _select():
    choice = os.environ.get("SGMNSE_KERNELS", "auto")
    if choice not in ("auto", "python", "cython"):
        raise ValueError(f"SGMNSE_KERNELS must be auto|python|cython, got {choice!r}")
    if choice in ("auto", "cython"):
        try:
            from . import _accel

            return _accel, "cython"
        except ImportError:
            if choice == "cython":
                raise
    from . import _pure

    return _pure, "python"


_impl, backend_name = _select()

leray_inplace = _impl.leray_inplace
diffusion_solve_inplace = _impl.diffusion_solve_inplace
convect = _impl.convect
assemble_convective = _impl.assemble_convective
hv_norms = _impl.hv_norms
