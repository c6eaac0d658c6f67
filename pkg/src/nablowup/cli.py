"""Command line entry point: ``nablowup <subcommand> --scenario FILE``.

Exit status is 0 when every certificate passes, 2 on a certificate
failure (including a configuration without a contraction) and 3 on an
invalid scenario. Artifacts go to ``--out`` (default: the scenario's
``output_dir``); floats in CSV files are written with ``repr`` so repeated
runs are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .blowdown import classical_history, manifold_curve, reconstruct_manifolds, write_cloud_csv
from .errors import EtaRatioTooSmall, MaxIter, NablowupError, NoContraction, ScenarioError
from .integrator import integrate_desingularized, integrate_original, orbit_compare, to_original
from .lpsolver import build_manifold_chart, decay_certificate, solve_fixed_point, stable_psi
from .nonlinear import zeta_ladder
from .polyfield import real_roots
from .scenario import Pipeline, build_pipeline, load_scenario
from .timewarp import WarpPair, write_trajectory_csv
from .verify import _jsonable, run_acceptance, verify_pipeline

EXIT_OK, EXIT_CERT, EXIT_CONFIG = 0, 2, 3

SUBCOMMANDS = ("blowup", "simulate", "manifold", "blowdown", "verify", "report")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nablowup", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--scenario", type=Path, help="scenario JSON file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="seed for probe directions and sample pairs")
    p.add_argument("--sigma0", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--delta", type=float, help="override the ball radius picked from the zeta ladder")
    return p


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _rows_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _fail(out: Path, failures: list[dict]) -> int:
    _write_json(out / "failures.json", failures)
    for f in failures:
        print(f"FAIL {f['name']}: {f['summary']}", file=sys.stderr)
    return EXIT_CERT if failures else EXIT_OK


# ---------------------------------------------------------------------------
# subcommands

def cmd_blowup(pl: Pipeline, out: Path, seed: int) -> int:
    d = pl.dfield
    eqs = pl.equilibria or []
    table = [{"v_star": str(e.v_star), "jacobian": e.jacobian, "eigenvalues": np.real(e.eigenvalues),
              "classification": e.classification, "exact": e.exact} for e in eqs]
    roots = {str(e.v_star) for e in eqs}
    # zeros of the u-rate on the axis that are not equilibria are reported, not silently dropped
    rate = d.f.px.div_u_power(1).restrict_a0() if d.f.px.u_valuation() >= 1 else []
    extra = []
    if any(rate):
        extra = [str(r) for r in real_roots(rate) if str(r) not in roots]
    rep = {
        "blown_up": pl.blown.to_text() if pl.blown is not None else None,
        "kappa": d.kappa,
        "f": d.f.to_text(),
        "g": d.g.to_text(),
        "axis_invariant": d.axis_invariant,
        "equilibria": table,
        "u_rate_sign_changes": [
            {"v": v, "note": f"f_u/u vanishes at (0, {v}) but f_v does not: not an equilibrium"}
            for v in extra],
    }
    if pl.blown is not None:
        print("blown-up:", ", ".join(pl.blown.to_text()))
    print("desingularized:", ", ".join(d.f.to_text()), f"(kappa={d.kappa})")
    for e in table:
        print(f"  (0, {e['v_star']}): eig {np.round(e['eigenvalues'], 12).tolist()} {e['classification']}")
    for x in rep["u_rate_sign_changes"]:
        print("  note:", x["note"])
    _write_json(out / "blowup.json", rep)
    return EXIT_OK


def cmd_simulate(pl: Pipeline, out: Path, seed: int) -> int:
    scn = pl.scenario
    spec = scn.simulate
    T = float(spec.get("T", 1.0))
    comps = []
    for k, p in enumerate(spec.get("init", [])):
        tr = integrate_desingularized(pl.dfield, tuple(p), T, forcing=scn.forcing)
        write_trajectory_csv(out / f"trajectory_{k}.csv", tr.t, tr.states[:, 0], tr.states[:, 1], tr.rho)
        entry = {"index": k, "init": p, "status": tr.status, "t_end": float(tr.t[-1]),
                 "rho_end": float(tr.rho[-1])}
        if not scn.desingularized and tr.t.size > 2:
            xy = to_original(tr, pl.dfield.chart)
            orig = integrate_original(scn.F, scn.G, scn.forcing, xy.states[0], (0.0, float(tr.rho[-1])))
            entry["orbit_deviation"] = orbit_compare(orig, xy, WarpPair(tr.t, tr.rho))
        comps.append(entry)
        dev = entry.get("orbit_deviation")
        print(f"trajectory {k}: status {tr.status}, t_end {tr.t[-1]:.6g}, rho_end {tr.rho[-1]:.6g}"
              + (f", orbit deviation {dev:.2e}" if dev is not None else ""))
    _write_json(out / "simulate.json", comps)
    bad = [{"name": f"orbit equivalence {c['index']}", "summary": f"deviation {c['orbit_deviation']:.2e}"}
           for c in comps if c.get("orbit_deviation", 0.0) > 1e-6]
    return _fail(out, bad)


def cmd_manifold(pl: Pipeline, out: Path, seed: int) -> int:
    heads = pl.head_vectors()
    chart = build_manifold_chart(pl.sigma, heads, pl.cfg, pl.rhs, pl.split)
    _rows_csv(out / "manifold.csv", ["sigma", "psi_index", "xi_u", "xi_v", "w_u", "w_v"],
              ([pl.sigma, i, *h, *w] for i, (h, w) in enumerate(zip(chart.psi_heads, chart.w_values))))
    results = verify_pipeline(pl, seed=seed, echo=print)
    _write_json(out / "certificates.json", {"seed": seed, "sigma": pl.sigma, "cfg": pl.cfg.as_dict(),
                                            "results": [r.as_dict() for r in results]})
    return _fail(out, [r.as_dict() for r in results if not r.passed])


def cmd_blowdown(pl: Pipeline, out: Path, seed: int) -> int:
    chart, vs = pl.centred.chart, pl.centred.v_shift
    spec = pl.scenario.blowdown
    sigmas = [float(s) for s in spec.get("sigmas", [pl.sigma])]
    if min(sigmas) < pl.cfg.sigma0:
        raise ScenarioError("blow-down times must be at least sigma0")
    e = pl.head_vectors()[0] / float(pl.heads[0]) if pl.heads and pl.heads[0] else None
    factors = spec.get("heads", pl.heads)
    heads = [float(f) * e for f in factors]
    points, excluded, curves = [], [], []
    for s in sigmas:
        mc = build_manifold_chart(s, heads, pl.cfg, pl.rhs, pl.split)
        clouds = reconstruct_manifolds(mc, pl.cfg, pl.rhs, pl.split, chart, vs)
        points += clouds["+"] + clouds["-"]
        excluded.append({"sigma": s, "excluded_radius": clouds["excluded_radius"]})
        for i, h in enumerate(heads):
            c = manifold_curve(classical_history(h, s, pl.cfg, pl.rhs, pl.split), pl.rhs, chart, vs)
            curves += [[s, i, *row] for row in zip(c["t"], c["tau"], c["x"], c["y"])]
    points.sort(key=lambda p: (p.sigma, p.source[0]))
    write_cloud_csv(out / "manifold_cloud.csv", points)
    _rows_csv(out / "manifold_curves.csv", ["sigma", "psi_index", "t", "tau", "x", "y"], curves)
    _write_json(out / "blowdown.json", {"excluded": excluded, "n_points": len(points)})
    for p in points:
        print(f"sigma {p.sigma:g} head {p.source[0]}: ({p.x:.6e}, {p.y:.6e}) tau {p.tau:.6g} side {p.side}")
    return EXIT_OK


def cmd_verify(pl: Pipeline | None, out: Path, seed: int) -> int:
    if pl is None:
        results = run_acceptance(seed=seed, echo=print)
    else:
        results = verify_pipeline(pl, seed=seed, echo=print)
    _write_json(out / "verify.json", {"seed": seed, "results": [r.as_dict() for r in results]})
    return _fail(out, [r.as_dict() for r in results if not r.passed])


def cmd_report(pl: Pipeline, out: Path, seed: int) -> int:
    sp, cfg, rhs = pl.split, pl.cfg, pl.rhs
    ladder = zeta_ladder(cfg.sigma0, rhs, sp, cfg.beta)
    Theta = max(pl.sigma, cfg.Theta_h)
    sols = [solve_fixed_point(stable_psi(h, sp, Theta), pl.sigma, cfg, rhs, sp) for h in pl.head_vectors()]
    rep = {
        "scenario": pl.scenario.name,
        "seed": seed,
        "kappa": rhs.kappa,
        "v_shift": str(Fraction(pl.centred.v_shift)),
        "split": sp.report(),
        "M": rhs.M,
        "D": rhs.D,
        "eta": rhs.forcing.decay_eta,
        "H": rhs.forcing.envelope_H,
        "zeta_ladder": ladder.as_dict(),
        "cfg": cfg.as_dict(),
        "lipschitz_constant": cfg.lipschitz_constant(sp),
        "N_bound": cfg.decay_bound(sp),
        "N_est": max(decay_certificate(s).N_est for s in sols),
        "contraction_factors": [s.contraction_factor for s in sols],
        "iterations": [s.iterations for s in sols],
    }
    _write_json(out / "report.json", rep)
    print(json.dumps(_jsonable({k: rep[k] for k in ("kappa", "M", "eta", "N_est", "N_bound",
                                                    "contraction_factors")}), sort_keys=True))
    return EXIT_OK


COMMANDS = {"blowup": cmd_blowup, "simulate": cmd_simulate, "manifold": cmd_manifold,
            "blowdown": cmd_blowdown, "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.scenario is None:
            if args.command != "verify":
                raise ScenarioError(f"{args.command} needs --scenario")
            pl, scn = None, None
        else:
            scn = load_scenario(args.scenario)
            ov = {"sigma0": args.sigma0, "beta": args.beta, "kappa": args.kappa, "delta": args.delta}
            pl = build_pipeline(scn, ov, with_cfg=args.command not in ("blowup", "simulate"))
        seed = args.seed if args.seed is not None else (scn.seed if scn else 0)
        out = args.out or Path(scn.output_dir if scn else "out/acceptance")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](pl, out, seed)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoContraction, EtaRatioTooSmall, MaxIter) as exc:
        print(f"certificate failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (NablowupError, ValueError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
