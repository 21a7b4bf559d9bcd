"""Batch front door: config ingestion, workflows, CSV + SVG artifacts.

Verbs: simulate, compare-modulations, envelope, design-inductor,
thermal-check, calorimetric.  Every run echoes the raw config bytes to
the output directory for reproducibility; identical configs produce
byte-identical CSV outputs.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import calorimetry, control, design, magnetics, thermal
from .config import (ConfigError, converter_params_from, load_config,
                     operating_point_from)
from .core import envelope_peak, inductor_envelope
from .modulation import (ModulationKpis, Scheme, classify_transitions,
                         profile_kpis, synthesize)
from .simulate import (Circuit, ConstantDutyDriver, SimulationDiverged, run,
                       trace_kpis)
from .svgplot import SvgFigure
from .thermal import ViaStackParams

EXIT_OK, EXIT_PARSE, EXIT_DIVERGED, EXIT_INFEASIBLE = 0, 2, 3, 4

KPI_COLUMN_DOC = ("compare-modulations columns, in order: "
                  + ", ".join(ModulationKpis.COLUMNS))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def _echo_config(cfg_path, out_dir):
    with open(cfg_path, "rb") as src:
        data = src.read()
    with open(os.path.join(out_dir, "run_config_echo.cfg"), "wb") as dst:
        dst.write(data)


def _load(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    os.makedirs(args.out_dir, exist_ok=True)
    _echo_config(args.config, args.out_dir)
    return cfg


def _fmt(x):
    return f"{x:.9g}"


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args):
    cfg = _load(args)
    try:
        op = operating_point_from(cfg)
        params = converter_params_from(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    mode = cfg.get("run", "topology", "rectifier")
    sim = cfg.sections.get("simulation", {})
    circuit = Circuit(mode=mode, op=op, params=params,
                      diode_drop=sim.get("diode_drop", 0.0),
                      esr_c_ac=sim.get("esr_c_ac", 0.01),
                      r_grid=sim.get("r_grid", 0.05),
                      ac_diodes=sim.get("ac_diodes", True),
                      l_load=sim.get("l_load", 250e-6),
                      r_load_ac=sim.get("r_load_ac", 0.0),
                      emf_hat=sim.get("emf_hat", 0.0),
                      r_ac_dcdc=sim.get("r_ac_dcdc", 0.0))

    horizon = cfg.get("run", "horizon_periods", 8.0) / op.f_o
    dt_factor = cfg.get("run", "dt_factor", 500.0)
    if args.dt_half:
        dt_factor *= 2.0
    dt = 1.0 / (dt_factor * op.f_s)

    from ibb3.simulate import steady_seed
    state0 = steady_seed(circuit)
    ctl_echo = {}
    csec = cfg.sections.get("controller", {})
    if mode == "rectifier":
        ctl_cfg = control.ControllerConfig.from_plant(
            op, params, ratio=csec.get("bw_ratio", 4.0),
            bw_inner=csec.get("bw_inner"), bw_pll=csec.get("bw_pll", 80.0))
        if "v_var" in csec:
            ctl_cfg.smoothing.v_var = csec["v_var"]
        if not csec.get("smoothing", True):
            ctl_cfg.smoothing.enabled = False
        ctl_cfg.gains_override = {k: v for k, v in csec.items()
                                  if k.startswith(("kp_", "ki_"))}
        ctl = control.RectifierController(op, params, ctl_cfg,
                                          v_dc_ref=csec.get("v_dc_ref", op.v_dc))
        driver = control.RectifierDriver(ctl, op.f_s)
        bw = ctl_cfg.bandwidths()
        ctl_echo = {"bw_i_l_Hz": bw[0], "bw_v_c_Hz": bw[1],
                    "bw_i_grid_Hz": bw[2], "bw_v_dc_Hz": bw[3],
                    "bw_pll_Hz": ctl_cfg.bw_pll,
                    "v_var_V": ctl._v_var(),
                    "smoothing": ctl_cfg.smoothing.enabled,
                    "kp_il": ctl.pi_il[0].g.kp, "ki_il": ctl.pi_il[0].g.ki,
                    "kp_vc": ctl.pi_vc[0].g.kp, "ki_vc": ctl.pi_vc[0].g.ki,
                    "kp_ig": ctl.pi_id.g.kp, "ki_ig": ctl.pi_id.g.ki,
                    "kp_vdc": ctl.pi_vdc.g.kp, "ki_vdc": ctl.pi_vdc.g.ki}
    elif mode == "inverter":
        ctl = control.InverterController(op, params)
        driver = control.InverterDriver(ctl, op.f_s)
    else:
        duty = sim.get("duty", 0.5)
        driver = ConstantDutyDriver(np.array([duty, 0.0, 0.0]))
        state0 = np.zeros(11)
        state0[9] = op.v_dc

    try:
        trace = run(circuit, driver, horizon, dt=dt, initial_state=state0)
    except SimulationDiverged as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    if ctl_echo:
        trace.meta["controller"] = ctl_echo

    trace.to_csv(os.path.join(args.out_dir, "trace.csv"))
    kpis = trace_kpis(trace, window=int(cfg.get("run", "settle_periods", 3)))
    _write_csv(os.path.join(args.out_dir, "kpis.csv"),
               ["kpi", "value"], [(n, _fmt(v)) for n, v in kpis.rows()])

    fig = SvgFigure("simulated waveforms", "t [s]", "value")
    dec = max(1, len(trace.t) // 4000)
    fig.line(trace.t[::dec], trace.col("vC_a_V")[::dec], "vC_a [V]")
    fig.line(trace.t[::dec], trace.col("iL_a_A")[::dec], "iL_a [A]")
    fig.line(trace.t[::dec], trace.col("vdc_V")[::dec], "vdc [V]")
    fig.write(os.path.join(args.out_dir, "waveforms.svg"))

    req = cfg.sections.get("requirements", {})
    ok = True
    if "thd_max" in req:
        ok &= kpis.thd_i < req["thd_max"]
    if "pf_min" in req:
        ok &= kpis.pf > req["pf_min"]
    if "v_dc_tol" in req:
        vdc = trace.col("vdc_V")[trace.t > trace.t[-1] - 3.0 / op.f_o]
        ok &= abs(float(np.mean(vdc)) - op.v_dc) <= req["v_dc_tol"] * op.v_dc
    return EXIT_OK if ok else 1


# ---------------------------------------------------------------------------
# compare-modulations

def cmd_compare_modulations(args):
    cfg = _load(args)
    op = operating_point_from(cfg)
    params = converter_params_from(cfg)
    msec = cfg.sections.get("modulation", {})
    names = msec.get("schemes", msec.get("scheme", "pwm,dpwm,bcm"))
    schemes = [Scheme(s.strip()) for s in names.split(",") if s.strip()]
    margin = msec.get("cm_margin", 0.11)

    def one(s):
        prof = synthesize(s, op, params, cm_margin=margin,
                          include_cap_current=msec.get("include_cap_current",
                                                       False),
                          n_samples=msec.get("samples", 20000))
        classify_transitions(prof)
        return profile_kpis(prof).to_row()

    if args.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, schemes))   # ordered, deterministic
    else:
        rows = [one(s) for s in schemes]
    _write_csv(os.path.join(args.out_dir, "modulation_kpis.csv"),
               ModulationKpis.COLUMNS, rows)

    fig = SvgFigure("inductor rms current by scheme", "", "I_L,rms [A]")
    fig.bars([r[0] for r in rows], [float(r[1]) for r in rows])
    fig.write(os.path.join(args.out_dir, "modulation_kpis.svg"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# envelope

def _sweep_grid(cfg):
    swp = cfg.sections.get("sweep", {})
    if "v_dc_min" not in swp:
        return None, None
    v = np.linspace(swp["v_dc_min"], swp["v_dc_max"], swp.get("v_dc_steps", 9))
    return v, swp.get("l_values")


def cmd_envelope(args):
    cfg = _load(args)
    op = operating_point_from(cfg)
    params = converter_params_from(cfg)
    t = np.linspace(0.0, 1.0 / op.f_o, 2001, endpoint=False)
    avg, rip, pk = inductor_envelope(t, op, params)
    _write_csv(os.path.join(args.out_dir, "envelope.csv"),
               ["t_s", "i_avg_A", "i_ripple_A", "i_pk_A"],
               [(_fmt(tt), _fmt(a), _fmt(r), _fmt(p))
                for tt, a, r, p in zip(t, avg, rip, pk)])
    fig = SvgFigure("inductor current envelope", "t [s]", "I [A]")
    fig.line(t, pk, "peak")
    fig.line(t, avg, "average")
    fig.write(os.path.join(args.out_dir, "envelope.svg"))

    # optional dimensioning sweep over the DC range per inductance value
    v_grid, l_set = _sweep_grid(cfg)
    if v_grid is not None:
        curves = design.dimensioning_sweep(op, params,
                                           l_set or [params.l_bb], v_grid)
        rows = []
        for c in curves:
            for v, pkv, rmsv in zip(c.v_dc, c.i_pk, c.i_rms):
                rows.append((_fmt(c.l), _fmt(v), _fmt(pkv), _fmt(rmsv)))
        _write_csv(os.path.join(args.out_dir, "dimensioning_sweep.csv"),
                   ["l_H", "v_dc_V", "i_pk_A", "i_rms_A"], rows)
        _write_csv(os.path.join(args.out_dir, "dimensioning_argmax.csv"),
                   ["l_H", "argmax_i_pk_V", "argmax_i_rms_V",
                    "argmax_product_V"],
                   [(_fmt(c.l), _fmt(c.argmax_i_pk), _fmt(c.argmax_i_rms),
                     _fmt(c.argmax_product)) for c in curves])
        fig2 = SvgFigure("peak inductor current vs DC voltage",
                         "V_dc [V]", "I_pk [A]")
        for c in curves:
            fig2.line(c.v_dc, c.i_pk, f"{c.l * 1e6:.0f} uH")
        fig2.write(os.path.join(args.out_dir, "dimensioning_sweep.svg"))
    print(f"envelope max: {envelope_peak(op, params):.3f} A")
    return EXIT_OK


# ---------------------------------------------------------------------------
# design-inductor

def cmd_design_inductor(args):
    cfg = _load(args)
    op = operating_point_from(cfg)
    params = converter_params_from(cfg)
    isec = cfg.sections.get("inductor", {})
    l_nom = isec.get("l_nominal", params.l_bb)
    cores = magnetics.BUILTIN_CORES
    if "core_db" in isec:
        cores = magnetics.load_core_csv(isec["core_db"])
    if not cores:
        print("empty core database", file=sys.stderr)
        return EXIT_INFEASIBLE

    # candidates are checked over the whole DC range when a sweep is
    # configured: a design must stay inside saturation and thermal
    # limits at every operating point, and its reported loss is the
    # worst case over the range
    v_grid, _ = _sweep_grid(cfg)
    if v_grid is None:
        v_grid = np.array([op.v_dc])
    profiles = [synthesize(Scheme.DPWM, replace(op, v_dc=float(v)),
                           replace(params, l_bb=l_nom)) for v in v_grid]

    points = []
    reasons = {}
    for core in cores:
        for n_turns in range(isec.get("n_turns_min", 3),
                             isec.get("n_turns_max", 12) + 1):
            d = magnetics.InductorDesign(
                core=core, l_nominal=l_nom, n_turns=n_turns,
                strands=180, d_strand=0.1e-3,
                p_loss_max=isec.get("p_loss_max", 8.0), k_prox=0.35)
            pt = None
            for prof in profiles:
                cand = magnetics.evaluate_inductor(d, prof)
                if pt is None or not cand.feasible \
                        or cand.p_loss > pt.p_loss:
                    pt = cand
                if not cand.feasible:
                    break
            pt.name = f"{core.name}_N{n_turns}"
            points.append(pt)
            if not pt.feasible:
                reasons[pt.infeasibility_reason.value] = \
                    reasons.get(pt.infeasibility_reason.value, 0) + 1

    front = design.pareto_front(points)
    front_set = {id(p) for p in front}
    _write_csv(os.path.join(args.out_dir, "inductor_designs.csv"),
               ["name", "volume_l", "p_loss_W", "p_copper_W", "p_core_W",
                "b_pk_T", "feasible", "reason", "pareto"],
               [(p.name, _fmt(p.volume), _fmt(p.p_loss), _fmt(p.p_copper),
                 _fmt(p.p_core), _fmt(p.b_pk), int(p.feasible),
                 p.infeasibility_reason.value if p.infeasibility_reason else "",
                 int(id(p) in front_set)) for p in points])

    if not any(p.feasible for p in points):
        hist = ", ".join(f"{k}: {v}" for k, v in sorted(reasons.items()))
        print(f"no feasible design ({hist})", file=sys.stderr)
        return EXIT_INFEASIBLE

    rule = isec.get("selection_rule", "min-volume-loss-product")
    best = design.pareto_and_select(points, rule) if rule != "pareto" else None
    fig = SvgFigure("inductor design space", "volume [l]", "loss [W]")
    feas = [p for p in points if p.feasible]
    fig.scatter([p.volume for p in feas], [p.p_loss for p in feas], "designs")
    fig.scatter([p.volume for p in front], [p.p_loss for p in front], "pareto")
    fig.write(os.path.join(args.out_dir, "inductor_designs.svg"))
    if best:
        _write_csv(os.path.join(args.out_dir, "selected_design.csv"),
                   ["name", "volume_l", "p_loss_W"],
                   [(best.name, _fmt(best.volume), _fmt(best.p_loss))])
    return EXIT_OK


# ---------------------------------------------------------------------------
# thermal-check

def cmd_thermal_check(args):
    cfg = _load(args)
    tsec = cfg.sections.get("thermal", {})
    if not tsec:
        print("missing [thermal] section", file=sys.stderr)
        return EXIT_PARSE
    rows = []
    p_tot = tsec.get("p_tot_hb", 9.5)
    split = tsec.get("split", 0.65)
    n_par = cfg.get("converter", "n_par", 2)
    p_pd = thermal.per_device_worst(p_tot, split, n_par)
    rows.append(("p_max_pd_W", _fmt(p_pd)))

    if "r_ca_min" in tsec:
        # bench sanity check against the no-heatsink case (room ambient,
        # one-decimal dissipation figure as stated above)
        t_j = tsec.get("t_bench", 25.0) + round(p_pd, 1) * (
            tsec.get("r_jc", 1.0) + tsec["r_ca_min"])
        rows.append(("t_j_no_heatsink_C", _fmt(t_j)))

    vias = ViaStackParams(l_via=tsec.get("l_via", 1.7e-3),
                          k_cu=tsec.get("k_cu", 385.0),
                          k_s=tsec.get("k_s", 60.0),
                          r_out=tsec.get("r_out", 0.15e-3),
                          r_in=tsec.get("r_in", 0.10e-3),
                          d_pad=tsec.get("d_pad", 0.3e-3),
                          lambda_pad=tsec.get("lambda_pad", 17.0),
                          a_pad=tsec.get("a_pad", 13.6e-6),
                          n_vias=tsec.get("n_vias", 36))
    r_chs = thermal.via_stack_rth(vias)
    rows.append(("r_chs_pd_KpW", _fmt(r_chs)))

    budget = thermal.heatsink_budget(tsec.get("t_j_max", 120.0),
                                     tsec.get("t_amb", 40.0), p_pd,
                                     tsec.get("r_jc", 1.0), r_chs,
                                     tsec.get("n_hb", 2 * n_par))
    rows.append(("r_hsa_pd_max_KpW", _fmt(budget.r_hsa_pd_max)))
    rows.append(("r_hsa_max_KpW", _fmt(budget.r_hsa_max)))
    rows.append(("cooling_feasible", int(budget.feasible)))

    if cfg.has("cooling"):
        co = cfg.sections["cooling"]
        r_th2, r_hsa = thermal.cspi_scale(co["cspi"], co["v2"], co["n_fans"])
        rows.append(("r_th2_KpW", _fmt(r_th2)))
        rows.append(("r_hsa_KpW", _fmt(r_hsa)))
        rows.append(("cooling_meets_budget",
                     int(r_hsa <= budget.r_hsa_max)))

    _write_csv(os.path.join(args.out_dir, "thermal_report.csv"),
               ["quantity", "value"], rows)
    if not budget.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------------------
# calorimetric

def cmd_calorimetric(args):
    cfg = _load(args)
    spec = calorimetry.table_a1_spec()
    csec = cfg.sections.get("calorimetric", {})
    fields = {k: v for k, v in csec.items() if k in spec.__dataclass_fields__}
    if fields:
        spec = replace(spec, **fields)
    limits = calorimetry.calorimetric_limits(spec)
    block = calorimetry.brass_block(spec, csec.get("l_br", 0.06),
                                    csec.get("w_br", 0.05))
    rchs = thermal.via_stack_rth(spec.vias)
    rows = [
        ("r_chs_pd_theory_KpW", _fmt(rchs)),
        ("p_max_pd_W", _fmt(limits.soft.p_max_pd)),
        ("p_cond_soft_W", _fmt(limits.soft.p_cond)),
        ("p_cond_pd_soft_W", _fmt(limits.soft.p_cond_pd)),
        ("p_sw_pd_soft_W", _fmt(limits.soft.p_sw_pd)),
        ("f_soft_max_Hz", _fmt(limits.soft.f_max)),
        ("p_cond_hard_W", _fmt(limits.hard.p_cond)),
        ("f_hard_max_Hz", _fmt(limits.hard.f_max)),
        ("c_th_JpK", _fmt(block.c_th)),
        ("v_br_m3", _fmt(block.v_br)),
        ("h_br_m", _fmt(block.h_br)),
    ]
    _write_csv(os.path.join(args.out_dir, "calorimetric_report.csv"),
               ["quantity", "value"], rows)
    if not (limits.soft.feasible and limits.hard.feasible):
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="ibb3",
        description="three-phase inverting buck-boost converter toolkit",
        epilog=KPI_COLUMN_DOC)
    p.add_argument("--out-dir", default="out", help="artifact directory")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized property corpuses")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers for sweep configs")
    sub = p.add_subparsers(dest="verb", required=True)
    for name, fn in [("simulate", cmd_simulate),
                     ("compare-modulations", cmd_compare_modulations),
                     ("envelope", cmd_envelope),
                     ("design-inductor", cmd_design_inductor),
                     ("thermal-check", cmd_thermal_check),
                     ("calorimetric", cmd_calorimetric)]:
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--dt-half", action="store_true",
                        help="halve the integration step (convergence check)")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:   # config loader aborts with a status code
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
