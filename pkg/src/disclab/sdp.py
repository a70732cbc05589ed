"""Moment relaxations for sublevel-set volume and an internal conic solver.

The order-t relaxation maximizes the pseudo-mass phi_0 over pseudo-moment
vectors phi (indexed by all monomials of degree <= 2t) subject to

    0 <= M_t(phi) <= M_t(reference measure on the box or ball),

optionally strengthened by the divergence-theorem equalities

    sum_b g_b phi_{a+b} = (d+|a|)/(d+deg+|a|) * phi_a,   |a| <= 2(t-n),

which are exact for the indicator measure of {g <= 1}.  The optimal values
decrease with t to the sublevel-set volume; the strengthened sequence
converges much faster.

Two deterministic dense solvers are provided.  The default is a primal-dual
interior-point method (predictor-corrector path following), which stays
accurate on the weakly complementary optima these relaxations develop at
higher orders.  A first-order operator-splitting (ADMM) alternative is kept
for cross-checking: eigenvalue clipping projects onto the PSD blocks, a
prefactored KKT solve handles the objective and equality rows, with
over-relaxation 1.5 and diagonal scaling.  Problem sizes are desk scale
(<= a few thousand scalar unknowns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.linalg

from .polyform import check_action, enumerate_indices_upto, sphere_minimum
from .spherequad import ball_moment, box_moment

OVER_RELAXATION = 1.5
RUIZ_SWEEPS = 10


@dataclass(frozen=True)
class PSDBlock:
    """One affine-slack PSD constraint: const + sum_i phi_i * A_i >= 0.

    `entries` lists (var, row, col, coeff) for row <= col; off-diagonal
    entries are implied symmetric.
    """

    size: int
    const: np.ndarray
    entries: tuple

    def materialize(self, phi):
        m = np.array(self.const, dtype=float)
        for var, r, c, coeff in self.entries:
            m[r, c] += coeff * phi[var]
            if r != c:
                m[c, r] += coeff * phi[var]
        return m


@dataclass(frozen=True)
class EqualityRow:
    """Sparse affine equality sum_j coeffs[j] * phi[vars[j]] = rhs."""

    vars: tuple
    coeffs: tuple
    rhs: float


@dataclass(frozen=True)
class SDPProblem:
    """Maximize objective . phi subject to PSD blocks and equality rows."""

    n_vars: int
    objective: tuple
    blocks: tuple
    equalities: tuple = ()
    warnings: tuple = ()


@dataclass(frozen=True)
class SolverReport:
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str
    dual_objective: float
    phi: np.ndarray


@lru_cache(maxsize=None)
def _upto(d, deg):
    return tuple(enumerate_indices_upto(d, deg))


@lru_cache(maxsize=None)
def _upto_pos(d, deg):
    return {a: i for i, a in enumerate(_upto(d, deg))}


def moment_matrix_map(d, t):
    """Rows/cols of M_t and the table (i, j) -> pseudo-moment index of the
    summed multi-index; symmetric pairs share the same variable."""
    rows = _upto(d, t)
    pos = _upto_pos(d, 2 * t)
    s = len(rows)
    table = np.empty((s, s), dtype=int)
    for i, a in enumerate(rows):
        for j, b in enumerate(rows):
            table[i, j] = pos[tuple(x + y for x, y in zip(a, b))]
    return rows, table


def _reference_moment(domain, d, alpha):
    if domain == "box":
        return box_moment(d, alpha)
    if domain == "ball":
        return ball_moment(d, alpha)
    raise ValueError(f"unknown domain {domain!r}")


def build_volume_relaxation(d, t, domain="box"):
    """The plain order-t relaxation: maximize phi_0 with the pseudo-moment
    matrix squeezed between 0 and the reference-measure moment matrix."""
    if t < 0:
        raise ValueError(f"order must be >= 0, got {t}")
    rows, table = moment_matrix_map(d, t)
    n_vars = len(_upto(d, 2 * t))
    s = len(rows)
    lower = []
    upper = []
    ref = np.empty((s, s))
    for i, a in enumerate(rows):
        for j, b in enumerate(rows):
            if j < i:
                continue
            var = int(table[i, j])
            lower.append((var, i, j, 1.0))
            upper.append((var, i, j, -1.0))
            gam = tuple(x + y for x, y in zip(a, b))
            ref[i, j] = ref[j, i] = _reference_moment(domain, d, gam)
    objective = tuple(1.0 if k == 0 else 0.0 for k in range(n_vars))
    return SDPProblem(
        n_vars=n_vars,
        objective=objective,
        blocks=(
            PSDBlock(s, np.zeros((s, s)), tuple(lower)),
            PSDBlock(s, ref, tuple(upper)),
        ),
    )


def add_stokes_constraints(problem, g, t):
    """Append the divergence-theorem equality rows for the action g.

    Requires t >= deg(g)/2; otherwise the problem is returned unchanged
    with a warning recorded.
    """
    d, m = g.dim, g.degree
    n = m // 2
    if t < n:
        return replace(
            problem,
            warnings=problem.warnings + (f"no Stokes rows at t={t} < n={n}",),
        )
    pos = _upto_pos(d, 2 * t)
    rows = []
    for alpha in enumerate_indices_upto(d, 2 * (t - n)):
        k = sum(alpha)
        coeffs = {}
        for beta, gb in g.terms:
            gam = tuple(x + y for x, y in zip(alpha, beta))
            assert sum(gam) <= 2 * t
            coeffs[pos[gam]] = coeffs.get(pos[gam], 0.0) + gb
        i0 = pos[alpha]
        coeffs[i0] = coeffs.get(i0, 0.0) - (d + k) / (d + m + k)
        items = sorted(coeffs.items())
        rows.append(
            EqualityRow(
                vars=tuple(v for v, _ in items),
                coeffs=tuple(c for _, c in items),
                rhs=0.0,
            )
        )
    return replace(problem, equalities=problem.equalities + tuple(rows))


def _block_operator(block, n_vars):
    """Dense matrix mapping phi to vec(sum_i phi_i A_i), with symmetry."""
    b = np.zeros((block.size * block.size, n_vars))
    for var, r, c, coeff in block.entries:
        b[r * block.size + c, var] += coeff
        if r != c:
            b[c * block.size + r, var] += coeff
    return b


def _scalings(problem, b_ops, eq_mat):
    """Cone-preserving diagonal scaling: per-variable scale, a single scalar
    per PSD block, and a scalar per equality row (Ruiz-style sweeps)."""
    n = problem.n_vars
    dvar = np.ones(n)
    sblk = np.ones(len(b_ops))
    seq = np.ones(len(problem.equalities)) if len(problem.equalities) else np.zeros(0)
    for _ in range(RUIZ_SWEEPS):
        stacked = []
        for k, b in enumerate(b_ops):
            stacked.append(sblk[k] * b * dvar[None, :])
        if eq_mat.size:
            stacked.append(seq[:, None] * eq_mat * dvar[None, :])
        kmat = np.vstack(stacked)
        cn = np.max(np.abs(kmat), axis=0)
        cn[cn == 0.0] = 1.0
        dvar /= np.sqrt(cn)
        for k, b in enumerate(b_ops):
            rn = np.max(np.abs(sblk[k] * b * dvar[None, :]))
            if rn > 0:
                sblk[k] /= math.sqrt(rn)
        if eq_mat.size:
            rn = np.max(np.abs(seq[:, None] * eq_mat * dvar[None, :]), axis=1)
            rn[rn == 0.0] = 1.0
            seq /= np.sqrt(rn)
    return dvar, sblk, seq


def _psd_project(mat):
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    w = np.maximum(w, 0.0)
    return (v * w) @ v.T


def solve(problem, tol=1e-6, max_iter=None, method="interior-point"):
    """Solve the conic program; deterministic.

    method='interior-point' (default) runs a dense primal-dual path
    following method, which handles the weakly complementary optima these
    moment relaxations produce at higher orders.  method='splitting' runs
    the first-order operator-splitting iteration instead.

    Returns the best iterate with status 'solved', 'max_iter', 'stalled',
    or 'infeasible-suspected' (residuals stalled far from feasibility).
    """
    if tol < 1e-9:
        raise ValueError("tolerance below 1e-9 is not supported")
    if method == "interior-point":
        return _solve_interior(problem, tol, 200 if max_iter is None else max_iter)
    if method == "splitting":
        return _solve_splitting(problem, tol, 200000 if max_iter is None else max_iter)
    raise ValueError(f"unknown method {method!r}")


def _max_step(mat, dmat, frac):
    """Largest step in (0, 1] keeping mat + a*dmat positive definite,
    backed off by frac."""
    w, v = np.linalg.eigh(mat)
    w = np.maximum(w, 1e-300)
    inv_half = (v / np.sqrt(w)) @ v.T
    lam = float(np.linalg.eigvalsh(inv_half @ dmat @ inv_half)[0])
    if lam >= -1e-14:
        return 1.0
    return min(1.0, -frac / lam)


def _solve_interior(problem, tol, max_iter):
    """Infeasible-start primal-dual interior-point iteration.

    The equality rows are eliminated up front (phi = phi_p + N z with N a
    nullspace basis), the slack matrices start at a multiple of the
    identity, and each step follows a predictor-corrector direction with
    adaptive centering.  Everything is dense; the blocks here are small.
    """
    n0 = problem.n_vars
    c0 = np.asarray(problem.objective, dtype=float)
    b_ops0 = [_block_operator(bl, n0) for bl in problem.blocks]
    consts0 = [0.5 * (bl.const + bl.const.T) for bl in problem.blocks]
    sizes = [bl.size for bl in problem.blocks]
    nb = len(sizes)
    ntot = sum(sizes)
    n_eq = len(problem.equalities)
    eq_mat = np.zeros((n_eq, n0))
    eq_rhs = np.zeros(n_eq)
    for i, row in enumerate(problem.equalities):
        for v, cf in zip(row.vars, row.coeffs):
            eq_mat[i, v] += cf
        eq_rhs[i] = row.rhs
    if n_eq:
        phi_p, *_ = np.linalg.lstsq(eq_mat, eq_rhs, rcond=None)
        if np.linalg.norm(eq_mat @ phi_p - eq_rhs) > 1e-8 * (
            1.0 + np.linalg.norm(eq_rhs)
        ):
            return SolverReport(
                objective=-math.inf,
                primal_residual=math.inf,
                dual_residual=math.inf,
                iterations=0,
                status="infeasible-suspected",
                dual_objective=-math.inf,
                phi=np.zeros(n0),
            )
        nsp = scipy.linalg.null_space(eq_mat)
    else:
        phi_p = np.zeros(n0)
        nsp = np.eye(n0)
    n = nsp.shape[1]
    c = nsp.T @ c0
    consts = []
    b_ops = []
    a_mats = []
    for k in range(nb):
        s = sizes[k]
        m = consts0[k] + (b_ops0[k] @ phi_p).reshape(s, s)
        consts.append(0.5 * (m + m.T))
        bo = b_ops0[k] @ nsp
        b_ops.append(bo)
        a_mats.append(
            [0.5 * (bo[:, i].reshape(s, s) + bo[:, i].reshape(s, s).T) for i in range(n)]
        )
    scale0 = max(1.0, max(float(np.linalg.norm(cc)) for cc in consts))
    z = np.zeros(n)
    slacks = [scale0 * np.eye(s) for s in sizes]
    duals = [np.eye(s) for s in sizes]
    status = "max_iter"
    res = gap = math.inf
    nr_d = nr_p = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        rd = c + np.array(
            [
                sum(np.tensordot(duals[k], a_mats[k][i]) for k in range(nb))
                for i in range(n)
            ]
        )
        rp_mats = []
        for k in range(nb):
            s = sizes[k]
            m = slacks[k] - consts[k] - (b_ops[k] @ z).reshape(s, s)
            rp_mats.append(0.5 * (m + m.T))
        gap = sum(float(np.tensordot(slacks[k], duals[k])) for k in range(nb))
        mu = gap / ntot
        nr_d = float(np.linalg.norm(rd, np.inf))
        nr_p = max(float(np.linalg.norm(m, np.inf)) for m in rp_mats)
        res = max(nr_d, nr_p)
        obj = float(c @ z)
        if res < tol * scale0 and gap < tol * (1.0 + abs(obj)):
            status = "solved"
            break
        s_inv = []
        for k in range(nb):
            w, v = np.linalg.eigh(slacks[k])
            w = np.maximum(w, max(w[-1], 1e-300) * 1e-14)
            s_inv.append((v / w) @ v.T)
        schur = np.zeros((n, n))
        for k in range(nb):
            sa = np.stack([s_inv[k] @ a_mats[k][i] for i in range(n)])
            ax = np.stack([a_mats[k][i] @ duals[k] for i in range(n)])
            schur += np.einsum("ipq,jpq->ij", sa, ax)
        schur = 0.5 * (schur + schur.T)
        schur += (1e-13 * max(np.trace(schur), 1e-300) / max(n, 1)) * np.eye(n)

        def newton(tau, second=None):
            h = np.zeros(n)
            ws = []
            for k in range(nb):
                corr = second[k] if second is not None else 0.0
                wk = s_inv[k] @ (
                    tau * np.eye(sizes[k]) - slacks[k] @ duals[k] - corr
                ) + s_inv[k] @ rp_mats[k] @ duals[k]
                wk = 0.5 * (wk + wk.T)
                ws.append(wk)
                for i in range(n):
                    h[i] += np.tensordot(wk, a_mats[k][i])
            try:
                dz = scipy.linalg.solve(schur, rd + h, assume_a="sym")
            except scipy.linalg.LinAlgError:
                dz = np.linalg.lstsq(schur, rd + h, rcond=None)[0]
            ds = []
            dx = []
            for k in range(nb):
                s = sizes[k]
                m = (b_ops[k] @ dz).reshape(s, s) - rp_mats[k]
                m = 0.5 * (m + m.T)
                ds.append(m)
                corr = second[k] if second is not None else 0.0
                m2 = s_inv[k] @ (
                    tau * np.eye(s) - slacks[k] @ duals[k] - corr
                ) - s_inv[k] @ m @ duals[k]
                dx.append(0.5 * (m2 + m2.T))
            return dz, ds, dx

        dz_a, ds_a, dx_a = newton(0.0)
        ap = min(_max_step(slacks[k], ds_a[k], 1.0) for k in range(nb))
        ad = min(_max_step(duals[k], dx_a[k], 1.0) for k in range(nb))
        gap_aff = sum(
            float(np.tensordot(slacks[k] + ap * ds_a[k], duals[k] + ad * dx_a[k]))
            for k in range(nb)
        )
        sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3
        step = 0.0
        for attempt in range(3):
            second = [ds_a[k] @ dx_a[k] for k in range(nb)] if attempt == 0 else None
            dz, ds, dx = newton(sigma * mu, second)
            frac = 0.9 if mu > 1e-6 else 0.98
            ap = min(_max_step(slacks[k], ds[k], frac) for k in range(nb))
            ad = min(_max_step(duals[k], dx[k], frac) for k in range(nb))
            step = min(ap, ad)
            if step > 0.01 or attempt == 2:
                break
            sigma = max(2.0 * sigma, 0.5 if attempt == 0 else 1.0)
        if step < 1e-10:
            status = "stalled"
            break
        z = z + step * dz
        slacks = [slacks[k] + step * ds[k] for k in range(nb)]
        duals = [duals[k] + step * dx[k] for k in range(nb)]
    phi = phi_p + nsp @ z
    objective = float(c0 @ phi)
    return SolverReport(
        objective=objective,
        primal_residual=nr_p,
        dual_residual=nr_d,
        iterations=it,
        status=status,
        dual_objective=objective + gap,
        phi=phi,
    )


def _solve_splitting(problem, tol, max_iter):
    n = problem.n_vars
    c = np.asarray(problem.objective, dtype=float)
    b_ops = [_block_operator(bl, n) for bl in problem.blocks]
    n_eq = len(problem.equalities)
    eq_mat = np.zeros((n_eq, n))
    eq_rhs = np.zeros(n_eq)
    for i, row in enumerate(problem.equalities):
        for v, cf in zip(row.vars, row.coeffs):
            eq_mat[i, v] += cf
        eq_rhs[i] = row.rhs

    dvar, sblk, seq = _scalings(problem, b_ops, eq_mat)
    bs = [s * b * dvar[None, :] for s, b in zip(sblk, b_ops)]
    consts = [s * bl.const for s, bl in zip(sblk, problem.blocks)]
    es = seq[:, None] * eq_mat * dvar[None, :] if n_eq else eq_mat
    bsq = seq * eq_rhs if n_eq else eq_rhs
    cs = dvar * c

    gram = sum(b.T @ b for b in bs)
    sizes = [bl.size for bl in problem.blocks]

    def factor(rho):
        if n_eq:
            kkt = np.zeros((n + n_eq, n + n_eq))
            kkt[:n, :n] = rho * gram
            kkt[:n, n:] = es.T
            kkt[n:, :n] = es
            return scipy.linalg.lu_factor(kkt)
        return scipy.linalg.cho_factor(gram)

    rho = 1.0
    fac = factor(rho)
    zs = [np.zeros((s, s)) for s in sizes]
    us = [np.zeros((s, s)) for s in sizes]
    phi = np.zeros(n)
    c_scale = 1.0 + float(np.linalg.norm(cs))
    status = "max_iter"
    pr = du = math.inf
    it = 0
    pr_hist = []
    for it in range(1, max_iter + 1):
        rhs = cs + rho * sum(
            b.T @ (z - u - cc).ravel() for b, z, u, cc in zip(bs, zs, us, consts)
        )
        if n_eq:
            full = np.concatenate([rhs, bsq])
            sol = scipy.linalg.lu_solve(fac, full)
            phi = sol[:n]
        else:
            phi = scipy.linalg.cho_solve(fac, rhs / rho)
        vs = [
            cc + (b @ phi).reshape(s, s)
            for cc, b, s in zip(consts, bs, sizes)
        ]
        pr = 0.0
        du = 0.0
        new_zs = []
        for k in range(len(sizes)):
            vk = 0.5 * (vs[k] + vs[k].T)
            vhat = OVER_RELAXATION * vk + (1.0 - OVER_RELAXATION) * zs[k]
            znew = _psd_project(vhat + us[k])
            us[k] = us[k] + vhat - znew
            scale = 1.0 + max(
                float(np.linalg.norm(vk)), float(np.linalg.norm(znew))
            )
            pr = max(pr, float(np.linalg.norm(vk - znew)) / scale)
            du = max(
                du,
                rho
                * float(np.linalg.norm(bs[k].T @ (znew - zs[k]).ravel()))
                / c_scale,
            )
            new_zs.append(znew)
        zs = new_zs
        if pr <= tol and du <= tol:
            status = "solved"
            break
        if it % 50 == 0:
            pr_hist.append(pr)
            ratio = pr / max(du, 1e-300)
            if ratio > 5.0 or ratio < 0.2:
                scale = min(10.0, max(0.1, math.sqrt(ratio)))
                new_rho = min(1e8, max(1e-8, rho * scale))
                if new_rho != rho:
                    us = [u * (rho / new_rho) for u in us]
                    rho = new_rho
                    fac = factor(rho)

    if status != "solved" and pr > 1e-3:
        tail = pr_hist[-20:]
        if len(tail) >= 5 and max(tail) - min(tail) < 1e-6 * max(tail):
            status = "infeasible-suspected"

    phi_orig = dvar * phi
    objective = float(c @ phi_orig)
    # dual estimate: multipliers for the PSD blocks from the scaled duals
    dual = 0.0
    for k, u in enumerate(us):
        dual += float(np.tensordot(consts[k], -rho * u))
    if n_eq:
        nu = sol[n:]
        dual -= float(bsq @ nu)
    return SolverReport(
        objective=objective,
        primal_residual=pr,
        dual_residual=du,
        iterations=it,
        status=status,
        dual_objective=dual,
        phi=phi_orig,
    )


@dataclass(frozen=True)
class HierarchyLevel:
    t: int
    value: float
    status: str


def hierarchy(g, t_max, with_stokes=True, domain="box", tol=1e-6, t_min=None):
    """Relaxation values for t = n..t_max, mapped back to the original g.

    When the sphere minimum of g is below 1, g is rescaled so its sublevel
    set fits inside the unit ball (hence the box too) and the computed
    values are mapped back by the homogeneity power law.  Actions already
    satisfying the containment are used as-is, so the relaxations stay
    nontrivial.
    """
    check_action(g)
    d, m = g.dim, g.degree
    n = m // 2
    smin = sphere_minimum(g)
    if smin < 1.0:
        beta = 1.0 / smin
        gg = g.scaled(beta)
        back = beta ** (d / m)
    else:
        gg = g
        back = 1.0
    t0 = n if t_min is None else max(t_min, 0)
    out = []
    for t in range(t0, t_max + 1):
        prob = build_volume_relaxation(d, t, domain=domain)
        if with_stokes:
            prob = add_stokes_constraints(prob, gg, t)
        rep = solve(prob, tol=tol)
        out.append(HierarchyLevel(t=t, value=back * rep.objective, status=rep.status))
    return out


def _fmt(x):
    return f"{x:.17g}"


def dump_problem(problem):
    """Serialize to the text sparse exchange format (objective is implicit:
    these problems always maximize the first pseudo-moment)."""
    lines = [
        f"vars {problem.n_vars}; blocks {len(problem.blocks)}; "
        f"eqs {len(problem.equalities)}"
    ]
    for bl in problem.blocks:
        lines.append(f"psd {bl.size}")
        for var, r, c, coeff in bl.entries:
            lines.append(f"var {var} {r} {c} {_fmt(coeff)}")
        for r in range(bl.size):
            for c in range(r, bl.size):
                v = bl.const[r, c]
                if v != 0.0:
                    lines.append(f"const {r} {c} {_fmt(v)}")
    for row in problem.equalities:
        parts = ["eq"]
        for v, cf in zip(row.vars, row.coeffs):
            parts.append(str(v))
            parts.append(_fmt(cf))
        parts.append(_fmt(row.rhs))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_problem(text):
    """Parse the dump format back into an SDPProblem."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].replace(";", "").split()
    n_vars, n_blocks, n_eqs = int(head[1]), int(head[3]), int(head[5])
    blocks = []
    equalities = []
    i = 1
    size = None
    entries = []
    const = None

    def flush():
        if size is not None:
            blocks.append(PSDBlock(size, const, tuple(entries)))

    while i < len(lines):
        parts = lines[i].split()
        if parts[0] == "psd":
            flush()
            size = int(parts[1])
            const = np.zeros((size, size))
            entries = []
        elif parts[0] == "var":
            entries.append(
                (int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]))
            )
        elif parts[0] == "const":
            r, c, v = int(parts[1]), int(parts[2]), float(parts[3])
            const[r, c] = v
            const[c, r] = v
        elif parts[0] == "eq":
            body = parts[1:]
            rhs = float(body[-1])
            body = body[:-1]
            vs = tuple(int(v) for v in body[0::2])
            cs = tuple(float(v) for v in body[1::2])
            equalities.append(EqualityRow(vs, cs, rhs))
        else:
            raise ValueError(f"bad line in problem dump: {lines[i]!r}")
        i += 1
    flush()
    if len(blocks) != n_blocks or len(equalities) != n_eqs:
        raise ValueError("problem dump header does not match body")
    objective = tuple(1.0 if k == 0 else 0.0 for k in range(n_vars))
    return SDPProblem(
        n_vars=n_vars,
        objective=objective,
        blocks=tuple(blocks),
        equalities=tuple(equalities),
    )
