"""Independent finite-difference oracles for the fiber operators.

Staggered uniform grid x_j = -L + (j + 1/2) h.  The squeezed and shell
resolvent oracles use second-order central differences plus a Wilson-type
term r (h/2) (-Lap) s3 that pushes the spurious lattice branch to mass
~ 2r/h (without it the correction kernels would carry an O(1) oscillating
artifact).  The zero-mode oracle uses fourth-order differences without the
Wilson term (its mass shift would move the eigenvalue off zero), since the
spurious branch sits at |E| >= sqrt(xi^2 + m^2), far from zero.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

S1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
S2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
S3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def staggered_grid(h: float, half_width: float):
    m = int(round(2.0 * half_width / h))
    assert m % 2 == 0
    return -half_width + (np.arange(m) + 0.5) * h


def eval_subgrid(h: float, half_width: float, stride: int):
    """Indices and nodes of every stride-th grid point, with the offset
    chosen so no evaluation node falls near the interface at x = 0 (the
    local truncation error of the interface rows must stay out of the
    sampled kernel)."""
    x = staggered_grid(h, half_width)
    best = None
    for offset in range(0, stride, max(1, stride // 16)):
        idx = np.arange(offset, len(x), stride)
        gap = np.min(np.abs(x[idx]))
        if best is None or gap > best[0]:
            best = (gap, idx)
    idx = best[1]
    return idx, x[idx]


def _free_blocks(nx: int, h: float, xi: float, m: float, wilson: float):
    main = sp.eye(nx, format="csr")
    up = sp.diags([np.ones(nx - 1)], [1], format="csr")
    dn = sp.diags([np.ones(nx - 1)], [-1], format="csr")
    dcent = (up - dn) / (2.0 * h)
    lap = (up + dn - 2.0 * main) / (h * h)
    ham = (sp.kron(dcent, -1j * S1) + sp.kron(main, xi * S2 + m * S3)
           - wilson * (h / 2.0) * sp.kron(lap, S3))
    return ham.tocsc()


def fd_squeezed_correction(xi, z, m, eta, tau, eps, h=1e-3, half_width=15.2,
                           stride=151, wilson=0.5):
    """Kernel of (H_eps - z)^{-1} - (H_0 - z)^{-1} sampled on the subgrid.

    Returns (nodes, corr) with corr of shape (n_eval*2, n_eval*2); the
    delta data is scaled by 1/h so columns approximate kernel columns.
    """
    x = staggered_grid(h, half_width)
    nx = len(x)
    idx, nodes = eval_subgrid(h, half_width, stride)
    ham0 = _free_blocks(nx, h, xi, m, wilson)
    pot = np.where(np.abs(x) < eps, 1.0 / (2.0 * eps), 0.0)
    vmat = eta * I2 + tau * S3
    ham_v = (ham0 + sp.kron(sp.diags([pot], [0]), vmat)).tocsc()
    zi = sp.eye(2 * nx) * z
    lu0 = spla.splu((ham0 - zi).tocsc())
    luv = spla.splu((ham_v - zi).tocsc())
    ne = len(idx)
    corr = np.empty((2 * ne, 2 * ne), dtype=complex)
    for li, l in enumerate(idx):
        for b in range(2):
            rhs = np.zeros(2 * nx, dtype=complex)
            rhs[2 * l + b] = 1.0 / h
            col = luv.solve(rhs) - lu0.solve(rhs)
            col = col.reshape(nx, 2)[idx].reshape(2 * ne)
            corr[:, 2 * li + b] = col
    return nodes, corr


def jump_transfer(v_shell: np.ndarray) -> np.ndarray:
    """u(0+) = S u(0-) from i s1 (u(0-) - u(0+)) + (V/2)(u(0-) + u(0+)) = 0
    (the left half-line is the inside of the interface)."""
    return np.linalg.solve(1j * S1 - v_shell / 2.0, 1j * S1 + v_shell / 2.0)


def fd_shell_correction(xi, z, m, v_shell, h=1e-3, half_width=15.2,
                        stride=151, wilson=0.5):
    """Kernel of the shell resolvent correction sampled on the subgrid.

    The interface sits between the two central nodes; central stencils
    cross it through the jump transfer matrix (the neighbor value re-
    expressed on the stencil's own side), which reduces to the free scheme
    when the shell coupling vanishes.  First-order accurate at the
    interface.
    """
    x = staggered_grid(h, half_width)
    nx = len(x)
    idx, nodes = eval_subgrid(h, half_width, stride)
    jl = nx // 2 - 1     # node at -h/2
    jr = nx // 2         # node at +h/2

    smat = jump_transfer(np.asarray(v_shell, dtype=complex))
    smat_inv = np.linalg.inv(smat)
    # first-order gradient correction of the crossing values: u' = D u on
    # resolvent columns away from the source, D = -i s1 (xi s2 + m s3 - z)
    dmat = -1j * S1 @ (xi * S2 + m * S3 - z * I2)
    cross_l = smat_inv + (h / 2.0) * (dmat @ smat_inv - smat_inv @ dmat)
    cross_r = smat + (h / 2.0) * (smat @ dmat - dmat @ smat)

    ham = _free_blocks(nx, h, xi, m, wilson).tolil()
    # row jl: neighbor at +h/2 seen from the left
    blk_r = (-1j * S1) / (2.0 * h) - wilson * (h / 2.0) * S3 / (h * h)
    ham[2 * jl: 2 * jl + 2, 2 * jr: 2 * jr + 2] = blk_r @ cross_l
    # row jr: neighbor at -h/2 seen from the right
    blk_l = (1j * S1) / (2.0 * h) - wilson * (h / 2.0) * S3 / (h * h)
    ham[2 * jr: 2 * jr + 2, 2 * jl: 2 * jl + 2] = blk_l @ cross_r
    ham = (ham.tocsc() - sp.eye(2 * nx) * z).tocsc()
    lu = spla.splu(ham)

    ham0 = _free_blocks(nx, h, xi, m, wilson)
    lu0 = spla.splu((ham0 - sp.eye(2 * nx) * z).tocsc())

    ne = len(idx)
    corr = np.empty((2 * ne, 2 * ne), dtype=complex)
    for li, l in enumerate(idx):
        for b in range(2):
            rhs = np.zeros(2 * nx, dtype=complex)
            rhs[2 * l + b] = 1.0 / h
            col = lu.solve(rhs) - lu0.solve(rhs)
            corr[:, 2 * li + b] = col.reshape(nx, 2)[idx].reshape(2 * ne)
    return nodes, corr


def fd_sigma_min(xi, eps, eta, tau, m, h=5e-4, half_width=3.0, iters=60):
    """Smallest singular value of the fourth-order discretized fiber
    operator (no spectral shift), via inverse power iteration."""
    x = staggered_grid(h, half_width)
    nx = len(x)
    main = sp.eye(nx, format="csr")
    shift = {k: sp.diags([np.ones(nx - abs(k))], [k], format="csr")
             for k in (-2, -1, 1, 2)}
    d4 = (8.0 * (shift[1] - shift[-1]) - (shift[2] - shift[-2])) / (12.0 * h)
    pot = np.where(np.abs(x) < eps, 1.0 / (2.0 * eps), 0.0)
    vmat = eta * I2 + tau * S3
    ham = (sp.kron(d4, -1j * S1) + sp.kron(main, xi * S2 + m * S3)
           + sp.kron(sp.diags([pot], [0]), vmat)).tocsc()
    lu = spla.splu(ham)
    rng = np.random.default_rng(20260809)
    v = rng.standard_normal(2 * nx) + 1j * rng.standard_normal(2 * nx)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = lu.solve(lu.solve(v), trans="H")       # (H^H H)^{-1}-like step
        lam = np.linalg.norm(w)
        v = w / lam
    return 1.0 / np.sqrt(lam)
