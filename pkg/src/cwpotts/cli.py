"""Command-line front end: every analysis as a reproducible, file-emitting command.

Subcommands
    critical     temperatures (no --beta) or classified critical points
    landscape    wells, gates, heights and depths on a simplex grid
    simulate     Monte Carlo vs exact hitting times vs the sharp prediction
    ek           transition-rate constants swept over temperatures
    free-energy  the mean-field free energy and its kink
    verify       certified inequality suite / temperature ordering

Exit codes: 0 success, 2 usage, 3 domain or regime error, 4 verification
failure.  Output is deterministic given the flags (seed included): file
headers embed the package version and the full configuration, floats are
written with 17 significant digits, and nothing time- or host-dependent
is emitted.  Mean transition times are reported on the time scale
2*pi*N*exp(N*theta); the theta-exponent convention is stated in every
header that uses it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, chain, critical, ek, landscape
from .errors import CwpottsError, DomainError, RegimeError
from .simplex import family_rep, uniform_point

_TIME_SCALE_NOTE = "time_scale_convention=2*pi*N*exp(N*theta)"


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _tag(x) -> str:
    """Compact deterministic float tag for file names."""
    return format(x, ".10g") if isinstance(x, float) else str(x)


def _header_lines(command: str, config: dict) -> list:
    cfg = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(config.items()))
    return [f"# cwpotts {__version__}", f"# command={command} {cfg}"]


def _write_table(path: Path, command: str, config: dict, columns: list, rows: list,
                 fmt: str, extra_header: list | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        doc = {
            "version": __version__,
            "command": command,
            "config": {k: config[k] for k in sorted(config)},
            "notes": extra_header or [],
            "columns": columns,
            "rows": [[_fmt(v) for v in row] for row in rows],
        }
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        return
    lines = _header_lines(command, config)
    for note in extra_header or []:
        lines.append(f"# {note}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _out_dir(args) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    env = os.environ.get("CWPOTTS_OUTPUT_DIR")
    return Path(env) if env else Path(".")


def _ext(args) -> str:
    return "json" if args.format == "json" else "csv"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_critical(args) -> int:
    q = args.q
    config = {"q": q, "beta": args.beta, "format": args.format}
    out = _out_dir(args)
    if args.beta is None:
        prof = critical.temperature_profile(q)
        rows = []
        for i, (val, br) in sorted(prof.beta_s.items()):
            rows.append([f"beta_s_{i}", val, br.lo, br.hi, int(br.certified)])
        rows.append(["beta_1", prof.beta1, prof.beta_s[1][1].lo, prof.beta_s[1][1].hi, 1])
        rows.append(["beta_2", prof.beta2, prof.beta2, prof.beta2, 1])
        bm, bmbr = prof.beta_m
        rows.append(["beta_3", bm, bmbr.lo, bmbr.hi, int(bmbr.certified)])
        rows.append(["beta_4", prof.beta4, prof.beta4, prof.beta4, 1])
        path = out / f"critical_temperatures_q{q}.{_ext(args)}"
        _write_table(path, "critical", config, ["name", "value", "lo", "hi", "certified"], rows,
                     _ext(args))
        print(f"q={q}: beta_1={_fmt(prof.beta1)} < beta_2={_fmt(prof.beta2)} "
              f"< beta_3={_fmt(prof.beta3)} <= beta_4={_fmt(prof.beta4)}")
        print(f"wrote {path}")
        return 0
    points = critical.enumerate_critical_points(q, args.beta)
    only_minimum = len(points) == 1
    rows = []
    for p in points:
        label = "the only minimum" if (only_minimum and p.family == "P") else p.label
        rows.append([
            p.family, p.i, p.t, p.spectrum.index, int(p.spectrum.degenerate),
            p.orbit_size, label,
            " ".join(_fmt(c) for c in p.location.coords),
        ])
    path = out / f"critical_points_q{q}_beta{_tag(args.beta)}.{_ext(args)}"
    _write_table(path, "critical", config,
                 ["family", "i", "t", "index", "degenerate", "orbit_size", "label", "location"],
                 rows, _ext(args))
    for r in rows:
        print(f"{r[0]}{'' if r[0] == 'P' else r[1]}: {r[6]} (index {r[3]}, orbit {r[5]})")
    print(f"wrote {path}")
    return 0


_DEFAULT_RESOLUTION = {3: 200, 4: 120, 5: 60}


def _cmd_landscape(args) -> int:
    q, beta = args.q, args.beta
    if q >= 6:
        raise DomainError("landscape grids support q <= 5 only; "
                          "use `critical` for the analytic gate structure at larger q")
    M = args.resolution if args.resolution is not None else _DEFAULT_RESOLUTION[q]
    config = {"q": q, "beta": beta, "resolution": M, "format": args.format}
    out = _out_dir(args)
    wd = landscape.wells(q, beta, M)
    d = landscape.depths(q, beta)
    rows = []
    for lab in sorted(wd.labels, key=str):
        for node in wd.labels[lab]:
            counts = wd.grid.counts[node]
            rows.append([str(lab), " ".join(str(int(c)) for c in counts),
                         wd.potential[node]])
    path_nodes = out / f"landscape_wells_q{q}_beta{_tag(beta)}_M{M}.{_ext(args)}"
    _write_table(path_nodes, "landscape", config, ["well", "counts", "potential"], rows,
                 _ext(args))
    gate_rows = []
    for (l1, l2), nodes in sorted(wd.gates.items(), key=str):
        for node in nodes:
            counts = wd.grid.counts[node]
            gate_rows.append([str(l1), str(l2), " ".join(str(int(c)) for c in counts),
                              wd.potential[node]])
    path_gates = out / f"landscape_gates_q{q}_beta{_tag(beta)}_M{M}.{_ext(args)}"
    summary = [
        ["saddle_height", wd.level],
        ["v1_level", wd.v1_level],
        ["theta_1", d.theta_1],
        ["theta_o", d.theta_o if d.theta_o is not None else float("nan")],
        ["n_wells", len(wd.labels)],
    ]
    path_summary = out / f"landscape_summary_q{q}_beta{_tag(beta)}_M{M}.{_ext(args)}"
    _write_table(path_gates, "landscape", config, ["well_a", "well_b", "counts", "potential"],
                 gate_rows, _ext(args))
    _write_table(path_summary, "landscape", config, ["name", "value"], summary, _ext(args))
    print(f"wells: {sorted(wd.labels, key=str)}  H_beta={_fmt(wd.level)}")
    print(f"wrote {path_nodes}, {path_gates}, {path_summary}")
    return 0


_EXACT_SOLVE_CAP = 200_000


def _cmd_simulate(args) -> int:
    q, N, beta = args.q, args.N, args.beta
    config = {"q": q, "N": N, "beta": beta, "runs": args.runs, "seed": args.seed,
              "transition": args.transition, "format": args.format}
    out = _out_dir(args)
    mc = chain.build_chain(q, N, beta)
    roots1 = critical.solve_uv(1, q, beta)
    u1_nodes = [mc.state_index(family_rep(q, 1, roots1.u, positions=[k])) for k in range(q)]
    p_node = mc.state_index(uniform_point(q))
    if args.transition == "u1-to-rest":
        start, target = u1_nodes[0], u1_nodes[1:]
    elif args.transition == "u1-to-p":
        start, target = u1_nodes[0], [p_node]
    else:
        start, target = p_node, u1_nodes
    exact = None
    if mc.n_states <= _EXACT_SOLVE_CAP:
        exact = chain.exact_mean_hitting_time(mc, start, target)
    else:
        print(f"state space {mc.n_states} exceeds the exact-solve cap; Monte Carlo only")
    prediction = ek.ek_prediction(q, beta, N, args.transition)
    regime = ek.reduced_chain(q, beta).regime
    notes = [_TIME_SCALE_NOTE, f"regime={regime}"]
    samples = np.array([])
    if args.runs > 0:
        samples = chain.sample_hitting_times(mc, start, target, args.runs, seed=args.seed)
    start_txt = " ".join(str(c) for c in mc.state_counts(start))
    target_txt = ";".join(" ".join(str(c) for c in mc.state_counts(t)) for t in target)
    rows = [[r, args.seed, q, N, beta, start_txt, target_txt, float(t)]
            for r, t in enumerate(samples)]
    path_runs = out / f"simulate_runs_q{q}_N{N}_beta{_tag(beta)}_seed{args.seed}.{_ext(args)}"
    _write_table(path_runs, "simulate", config,
                 ["run", "seed", "q", "N", "beta", "start", "target", "hitting_time"],
                 rows, _ext(args), extra_header=notes)
    if args.dump_trajectory:
        traj = chain.simulate(mc, start, target=target, max_jumps=10_000_000, seed=args.seed)
        traj_rows = [[float(t), " ".join(str(c) for c in mc.state_counts(int(s)))]
                     for t, s in zip(traj.times, traj.states)]
        path_traj = out / f"simulate_trajectory_q{q}_N{N}_beta{_tag(beta)}_seed{args.seed}.{_ext(args)}"
        _write_table(path_traj, "simulate", config, ["t", "state"], traj_rows,
                     _ext(args), extra_header=notes)
        print(f"wrote {path_traj}")
    mean = float(samples.mean()) if samples.size else float("nan")
    sem = float(samples.std(ddof=1) / np.sqrt(samples.size)) if samples.size > 1 else float("nan")
    summary = [[
        q, N, beta, args.transition,
        exact if exact is not None else float("nan"),
        mean, sem, prediction,
        (exact / prediction) if exact is not None else float("nan"),
    ]]
    path_summary = out / f"simulate_summary_q{q}_N{N}_beta{_tag(beta)}_seed{args.seed}.{_ext(args)}"
    _write_table(path_summary, "simulate", config,
                 ["q", "N", "beta", "transition", "exact", "mc_mean", "mc_stderr",
                  "prediction", "exact_over_prediction"],
                 summary, _ext(args), extra_header=notes)
    if exact is not None:
        print(f"exact={_fmt(exact)} prediction={_fmt(prediction)}")
    if samples.size:
        print(f"mc_mean={_fmt(mean)} +- {_fmt(sem)} ({samples.size} runs)")
    print(f"wrote {path_runs}, {path_summary}")
    return 0


def _cmd_ek(args) -> int:
    q = args.q
    betas = np.linspace(args.beta_min, args.beta_max, args.steps)
    config = {"q": q, "beta_min": args.beta_min, "beta_max": args.beta_max,
              "steps": args.steps, "format": args.format}
    out = _out_dir(args)
    rows = []
    for b in betas:
        b = float(b)
        try:
            rc = ek.reduced_chain(q, b)
            c = ek.ek_constants(q, b)
        except (RegimeError, CwpottsError):
            continue
        nan = float("nan")
        rows.append([
            q, b, rc.regime,
            c.omega_o if c.omega_o is not None else nan,
            c.omega_1 if c.omega_1 is not None else nan,
            c.nu_o if c.nu_o is not None else nan,
            c.nu_1,
            c.theta_o if c.theta_o is not None else nan,
            c.theta_1,
        ])
    path = out / f"ek_constants_q{q}.{_ext(args)}"
    _write_table(path, "ek", config,
                 ["q", "beta", "regime", "omega_o", "omega_1", "nu_o", "nu_1",
                  "theta_o", "theta_1"],
                 rows, _ext(args), extra_header=[_TIME_SCALE_NOTE])
    print(f"wrote {path} ({len(rows)} temperatures)")
    return 0


def _cmd_free_energy(args) -> int:
    q = args.q
    betas = np.linspace(args.beta_min, args.beta_max, args.steps)
    config = {"q": q, "beta_min": args.beta_min, "beta_max": args.beta_max,
              "steps": args.steps, "format": args.format}
    out = _out_dir(args)
    curve = landscape.free_energy_curve(q, betas)
    rows = [[float(b), float(p)] for b, p in zip(curve.betas, curve.psi)]
    path = out / f"free_energy_q{q}.{_ext(args)}"
    notes = [
        f"beta_2={_fmt(curve.beta2)}",
        f"psi_prime_left={_fmt(curve.psi_prime_left)}",
        f"psi_prime_right={_fmt(curve.psi_prime_right)}",
        f"derivative_jump_analytic={_fmt(curve.jump_analytic)}",
    ]
    _write_table(path, "free-energy", config, ["beta", "psi"], rows, _ext(args),
                 extra_header=notes)
    print(f"first-order kink at beta_2={_fmt(curve.beta2)}: "
          f"jump={_fmt(curve.psi_prime_left - curve.psi_prime_right)}")
    print(f"wrote {path}")
    return 0


def _cmd_verify(args) -> int:
    q_lo, q_hi = args.q_lo, args.q_hi
    if q_lo < 3 or q_hi < q_lo:
        raise DomainError(f"bad range [{q_lo}, {q_hi}]")
    config = {"q_lo": q_lo, "q_hi": q_hi, "format": args.format}
    out = _out_dir(args)
    failures = []
    rows = []
    for q in range(q_lo, min(q_hi, 4) + 1):
        prof = critical.temperature_profile(q)
        ordered = prof.beta1 < prof.beta2 < prof.beta3 == prof.beta4
        rows.append([q, "ordering_beta1<beta2<beta3=q", float(ordered), int(ordered)])
        if not ordered:
            failures.append(q)
    appendix_qs = [q for q in range(max(q_lo, 5), q_hi + 1)]
    if appendix_qs:
        report = critical.verify_appendix(appendix_qs)
        report.to_csv(out / "verify_appendix_brackets.csv")
        for r in report.rows:
            rows.append([r.q, "margin_gap", r.margin_gap, int(r.margin_gap > 0)])
            if r.phi_asserted:
                rows.append([r.q, "margin_phi", r.margin_phi, int(r.margin_phi > 0)])
            elif r.q == 5:
                rows.append([r.q, "margin_phi_reported", r.margin_phi, 1])
            if r.q == 6500:
                rows.append([r.q, "margin_fstar", r.margin_fstar, int(r.margin_fstar > 0)])
                print(f"f_star(6500) margin = {_fmt(r.margin_fstar)}")
        failures.extend(report.failures)
    # free-energy kink check at the low end of the range
    curve = landscape.free_energy_curve(q_lo, np.linspace(1.0, q_lo + 1.0, 5))
    jump_fd = curve.psi_prime_left - curve.psi_prime_right
    kink_ok = abs(jump_fd - curve.jump_analytic) < 1e-4 and curve.jump_analytic > 0
    rows.append([q_lo, "free_energy_kink", jump_fd - curve.jump_analytic, int(kink_ok)])
    if not kink_ok:
        failures.append(q_lo)
    path = out / f"verify_report_q{q_lo}_{q_hi}.{_ext(args)}"
    _write_table(path, "verify", config, ["q", "check", "margin", "ok"], rows, _ext(args))
    print(f"wrote {path}")
    if failures:
        print(f"FAILED checks at q in {sorted(set(failures))}", file=sys.stderr)
        return 4
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cwpotts", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output-dir", default=None, help="directory for emitted files "
                       "(default: $CWPOTTS_OUTPUT_DIR or the working directory)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("critical", help="critical temperatures / classified critical points")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta", type=float, default=None)
    common(p)
    p.set_defaults(func=_cmd_critical)

    p = sub.add_parser("landscape", help="wells, gates and depths on a simplex grid")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--resolution", "-M", type=int, default=None,
                   help="grid scale (default 200/120/60 for q=3/4/5)")
    common(p)
    p.set_defaults(func=_cmd_landscape)

    p = sub.add_parser("simulate", help="hitting times: Monte Carlo vs exact vs prediction")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transition", choices=("u1-to-rest", "u1-to-p", "p-to-u1-set"),
                   default="u1-to-rest")
    p.add_argument("--dump-trajectory", action="store_true",
                   help="emit the (t, state) pairs of one seeded run")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ek", help="transition-rate constants over a beta grid")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    common(p)
    p.set_defaults(func=_cmd_ek)

    p = sub.add_parser("free-energy", help="mean-field free energy and its kink")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=101)
    common(p)
    p.set_defaults(func=_cmd_free_energy)

    p = sub.add_parser("verify", help="certified inequality suite / ordering checks")
    p.add_argument("--q-lo", type=int, default=5)
    p.add_argument("--q-hi", type=int, default=6500)
    common(p)
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (DomainError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CwpottsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
