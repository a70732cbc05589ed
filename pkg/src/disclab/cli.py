"""Command-line front end.

Subcommands: partition, moments, recover, verify, volume, entropy.
Output is a human-readable table by default; --output json/csv switch to
machine formats with 17-significant-digit decimals.  Exit codes: 0 ok,
2 parse/usage error, 3 action fails strict positivity, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import boltzmann, fixedpoint, sdp, variational
from .errors import (
    DegenerateActionError,
    FactorizationError,
    FormParseError,
    QuadratureError,
)
from .polyform import enumerate_indices_upto, parse_form

EXIT_PARSE = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERIC = 4


@dataclass
class RunConfig:
    dim: int
    action: object
    quad_exactness: int = 32
    tol: float = 1e-6
    seed: int = 0
    output: str = "text"
    domain: str = "box"

    def __post_init__(self):
        if not 1e-9 <= self.tol <= 1e-2:
            raise ValueError(f"tol must lie in [1e-9, 1e-2], got {self.tol}")
        if not 4 <= self.quad_exactness <= 64:
            raise ValueError(
                f"quad-exactness must lie in [4, 64], got {self.quad_exactness}"
            )


def _fmt(x):
    return f"{x:.17g}"


def _thread_cap():
    raw = os.environ.get("DISCLAB_THREADS")
    if raw is None:
        return None
    cap = int(raw)
    if cap < 1:
        raise ValueError("DISCLAB_THREADS must be >= 1")
    return cap


def _emit(config, rows, header, title, out):
    """rows: list of lists of str-able cells (numbers already formatted)."""
    if config.output == "json":
        payload = {"title": title, "columns": header, "rows": rows}
        out.write(json.dumps(payload, indent=2) + "\n")
    elif config.output == "csv":
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(str(c) for c in row) + "\n")
    else:
        out.write(title + "\n")
        widths = [
            max(len(str(h)), max((len(str(r[i])) for r in rows), default=0))
            for i, h in enumerate(header)
        ]
        out.write(
            "  ".join(str(h).ljust(w) for h, w in zip(header, widths)) + "\n"
        )
        for row in rows:
            out.write(
                "  ".join(str(c).ljust(w) for c, w in zip(row, widths)) + "\n"
            )


def _load_action(args):
    if args.action_file:
        with open(args.action_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    elif args.action:
        text = args.action
    else:
        raise FormParseError("no action given (use --action or --action-file)")
    return parse_form(text, args.dim)


def _config(args):
    action = _load_action(args)
    return RunConfig(
        dim=args.dim,
        action=action,
        quad_exactness=args.quad_exactness,
        tol=args.tol,
        seed=args.seed,
        output=args.output,
        domain=args.domain,
    )


def _alpha_label(alpha):
    return "(" + ",".join(str(a) for a in alpha) + ")"


def cmd_partition(config, out):
    g = config.action
    rep = fixedpoint.fixed_point_report(g)
    zs = {
        "direct": rep.z_direct,
        "coeff-norm": rep.z_from_coeffs,
        "moment-norm": rep.z_from_moments,
    }
    devs = []
    names = list(zs)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = zs[names[i]], zs[names[j]]
            devs.append(abs(a - b) / max(abs(a), abs(b)))
    rows = [[k, _fmt(v)] for k, v in zs.items()]
    rows.append(["max-pairwise-deviation", _fmt(max(devs))])
    _emit(config, rows, ["route", "value"], "partition function", out)
    return 0 if max(devs) <= 1e-6 else EXIT_NUMERIC


def cmd_moments(config, max_deg, out):
    g = config.action
    d, m = g.dim, g.degree
    rows = []
    for alpha in enumerate_indices_upto(d, max_deg):
        lev = boltzmann.levelset_moment(g, alpha)
        mu = boltzmann.mu_moment(g, alpha)
        ratio = math.gamma(1.0 + (d + sum(alpha)) / m)
        rows.append(
            [_alpha_label(alpha), _fmt(mu), _fmt(lev), _fmt(ratio)]
        )
    _emit(
        config,
        rows,
        ["alpha", "boltzmann", "levelset", "gamma-ratio"],
        "moments",
        out,
    )
    return 0


def cmd_recover(config, out):
    g = config.action
    hm = boltzmann.mu_moment_matrix(g)
    mu = boltzmann.mu_moment_vector(g, g.degree)
    rec = fixedpoint.recover_form(hm, mu)
    basis = hm.row_basis
    orig = g.coeff_vector(basis)
    got = rec.coeff_vector(basis)
    scale = max(1e-300, float(np.abs(orig).max()))
    rows = [
        [_alpha_label(a), _fmt(orig[i]), _fmt(got[i])]
        for i, a in enumerate(basis.indices)
    ]
    err = float(np.abs(got - orig).max()) / scale
    rows.append(["max-relative-error", _fmt(err), ""])
    _emit(config, rows, ["alpha", "input", "recovered"], "recovered action", out)
    return 0


def cmd_verify(config, out):
    g = config.action
    rep = fixedpoint.fixed_point_report(g)
    hm = boltzmann.mu_moment_matrix(g)
    mu = boltzmann.mu_moment_vector(g, g.degree)
    basis = hm.row_basis
    orig = g.coeff_vector(basis)
    got = rep.g_recovered.coeff_vector(basis)
    roundtrip = float(np.abs(got - orig).max()) / max(
        1e-300, float(np.abs(orig).max())
    )
    zs = [rep.z_direct, rep.z_from_coeffs, rep.z_from_moments]
    zdev = max(
        abs(a - b) / max(abs(a), abs(b)) for a in zs for b in zs
    )
    ward = variational.ward_residuals(g, g.degree)
    ent = variational.entropy_report(g)
    rng = np.random.default_rng(config.seed)
    pts = rng.standard_normal((20, g.dim))
    pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1, keepdims=True))
    cd = max(
        fixedpoint.cd_identity_residual(g, hm, mu, p) for p in pts
    )
    checks = [
        ("fixed-point-residual", rep.residual_canonical, 1e-8),
        ("roundtrip-recovery", roundtrip, 1e-6),
        ("z-identity-agreement", zdev, 1e-7),
        ("ward-residual-max", max(ward.values()), 1e-8),
        ("entropy-gap", ent.gap, 1e-8),
        ("cd-kernel-residual", cd, 1e-6),
    ]
    rows = []
    ok = True
    for name, value, bound in checks:
        passed = value <= bound
        ok = ok and passed
        rows.append(
            [name, _fmt(value), _fmt(bound), "PASS" if passed else "FAIL"]
        )
    _emit(config, rows, ["check", "value", "bound", "status"], "verification", out)
    return 0 if ok else EXIT_NUMERIC


def cmd_volume(config, t_max, compare, with_stokes, out):
    g = config.action
    n = g.degree // 2
    vol = boltzmann.levelset_moment(g, (0,) * g.dim)
    want_plain = compare or not with_stokes
    want_stokes = compare or with_stokes
    plain = (
        sdp.hierarchy(g, t_max, with_stokes=False, domain=config.domain,
                      tol=config.tol)
        if want_plain and t_max >= n
        else []
    )
    stok = (
        sdp.hierarchy(g, t_max, with_stokes=True, domain=config.domain,
                      tol=config.tol)
        if want_stokes and t_max >= n
        else []
    )
    if want_stokes and t_max < n:
        sys.stderr.write("warning: no Stokes rows at t<n\n")
    by_t = {}
    for lev in plain:
        by_t.setdefault(lev.t, {})["rho"] = lev
    for lev in stok:
        by_t.setdefault(lev.t, {})["delta"] = lev
    rows = []
    for t in sorted(by_t):
        rec = by_t[t]
        rho = rec.get("rho")
        delta = rec.get("delta")

        def cell(lev, gap=False):
            if lev is None:
                return ""
            if lev.status not in ("solved",):
                return f"failed({lev.status})"
            return _fmt(lev.value - vol if gap else lev.value)

        rows.append(
            [
                str(t),
                cell(rho),
                cell(delta),
                _fmt(vol),
                cell(rho, gap=True),
                cell(delta, gap=True),
            ]
        )
    _emit(
        config,
        rows,
        ["t", "rho_t", "delta_t", "vol_exact", "gap_plain", "gap_stokes"],
        "volume hierarchy",
        out,
    )
    return 0


def cmd_entropy(config, out):
    ent = variational.entropy_report(config.action)
    rows = [
        ["z", _fmt(ent.z)],
        ["c-star", _fmt(ent.c_star)],
        ["entropy-primal", _fmt(ent.entropy_primal)],
        ["entropy-closed", _fmt(ent.entropy_closed)],
        ["entropy-closed-c2n", _fmt(ent.entropy_closed_c2n)],
        ["dual-value", _fmt(ent.dual_value)],
        ["gap", _fmt(ent.gap)],
    ]
    _emit(config, rows, ["field", "value"], "entropy report", out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="disclab",
        description="Partition functions and moment identities of positive "
        "even-degree forms, plus moment-SDP volume bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dim", type=int, required=True)
        p.add_argument("--action", type=str, default=None)
        p.add_argument("--action-file", type=str, default=None)
        p.add_argument("--quad-exactness", type=int, default=32)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--output", choices=("text", "json", "csv"), default="text"
        )
        p.add_argument("--domain", choices=("box", "ball"), default="box")

    common(sub.add_parser("partition", help="Z(g) by three routes"))
    p = sub.add_parser("moments", help="Boltzmann vs level-set moments")
    common(p)
    p.add_argument("--max-deg", type=int, default=None)
    common(sub.add_parser("recover", help="recover the action from moments"))
    common(sub.add_parser("verify", help="run the identity test suite"))
    p = sub.add_parser("volume", help="moment-SDP volume hierarchy")
    common(p)
    p.add_argument("--t-max", type=int, required=True)
    stokes = p.add_mutually_exclusive_group()
    stokes.add_argument("--stokes", dest="stokes", action="store_true")
    stokes.add_argument("--no-stokes", dest="stokes", action="store_false")
    p.set_defaults(stokes=True)
    p.add_argument("--compare", action="store_true")
    common(sub.add_parser("entropy", help="max-entropy diagnostics"))
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    try:
        _thread_cap()  # validate; library paths are serial/deterministic
        config = _config(args)
        if args.command == "partition":
            return cmd_partition(config, out)
        if args.command == "moments":
            max_deg = args.max_deg
            if max_deg is None:
                max_deg = config.action.degree
            return cmd_moments(config, max_deg, out)
        if args.command == "recover":
            return cmd_recover(config, out)
        if args.command == "verify":
            return cmd_verify(config, out)
        if args.command == "volume":
            return cmd_volume(config, args.t_max, args.compare, args.stokes, out)
        if args.command == "entropy":
            return cmd_entropy(config, out)
        raise AssertionError(args.command)
    except FormParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except DegenerateActionError as exc:
        sys.stderr.write(f"action rejected: {exc}\n")
        return EXIT_ASSUMPTION
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except (QuadratureError, FactorizationError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
