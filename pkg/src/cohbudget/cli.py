"""
Command-line front end.

Every run reads one JSON config; ``--out``, ``--seed`` and ``--format``
override the matching config entries. Data goes to the output file (or stdout
when no output path is set); the one-line summary goes to stdout, or to
stderr when data occupies stdout.

Exit codes: 0 success, 1 invalid input, 2 only infeasible results,
3 fit did not converge.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import jsonschema
import numpy as np

from . import budget, calibration, model, montecarlo, split

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3

_num = {"type": "number"}
_ext = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]}
_pos = {"type": "number", "exclusiveMinimum": 0}
_num_list = {"type": "array", "items": {"type": "number"}}
_fmt = {"type": "string"}
_fec = {"enum": ["HD", "SD"]}


def _obj(props: dict, doc: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "x-doc": doc}


_CASE_PROPS = {
    "format": _fmt, "n_pol": {"enum": [1, 2]}, "ber_target": _pos, "fec": _fec,
    "modulator_loss_db": {"type": "number", "minimum": 0}, "m_index": _pos, "baud_hz": _pos,
}

SECTIONS = {
    "noise": _obj(
        {"responsivity_a_per_w": _pos, "cmrr_db": _ext, "itia_pa_sqrthz": {"type": "number", "minimum": 0},
         "snrq_db": _ext, "rin_db_hz": _ext},
        {
            "responsivity_a_per_w": "equivalent receiver responsivity, A/W (0.07)",
            "cmrr_db": "balanced-detector CMRR, dB, or \"-inf\" (-20)",
            "itia_pa_sqrthz": "TIA input-referred noise density, pA/sqrt(Hz) (19)",
            "snrq_db": "implementation-penalty SNR at the reference baud, dB, or \"inf\" (18.4)",
            "rin_db_hz": "LO RIN, dB/Hz, or \"-inf\" (-145)",
        },
    ),
    "link": _obj(
        {**_CASE_PROPS, "laser_power_dbm": _num, "snrq_policy": {"enum": list(budget.SNRQ_POLICIES)},
         "snrq_ref_baud_hz": _pos, "tia_policy": {"enum": list(budget.TIA_POLICIES)},
         "tia_exponent": _num, "tia_ref_bandwidth_hz": _pos},
        {
            "format": "QPSK | 16QAM | 64QAM (QPSK)",
            "n_pol": "1 or 2 polarizations (2)",
            "baud_hz": "symbol rate, Hz (28e9)",
            "laser_power_dbm": "laser CW power feeding modulator and LO, dBm (14)",
            "modulator_loss_db": "total modulator loss, dB (format default: 14 / 10 single-pol QPSK / 18.2)",
            "m_index": "V_pp/V_pi; looks up modulator_loss_db from the default table",
            "ber_target": "pre-FEC BER target (4e-3)",
            "fec": "HD (4e-3) or SD (2e-2); alternative to ber_target",
            "snrq_policy": "fixed | scaled_with_baud (scaled_with_baud)",
            "snrq_ref_baud_hz": "baud at which snrq_db applies (28e9)",
            "tia_policy": "fixed | power_law (fixed)",
            "tia_exponent": "power-law exponent x (0.5)",
            "tia_ref_bandwidth_hz": "power-law reference bandwidth, Hz (22e9)",
        },
    ),
    "sweep": _obj(
        {"axis": {"enum": list(budget.SWEEP_AXES)}, "values": _num_list, "start": _num, "stop": _num,
         "step": _pos, "cases": {"type": "array", "items": {"type": "object", "additionalProperties": False,
                                                            "properties": _CASE_PROPS}}},
        {
            "axis": "laser_power_dbm | raw_bit_rate | baud_hz (set by the subcommand for sweep-laser/sweep-bitrate)",
            "values": "explicit ascending grid",
            "start/stop/step": "inclusive grid, alternative to values",
            "cases": "list of link overrides (format, n_pol, ber_target, fec, modulator_loss_db, m_index, baud_hz)",
        },
    ),
    "split": _obj(
        {"y_axis": {"enum": list(split.Y_AXES)}, "rho_values": _num_list, "rho_start": _num, "rho_stop": _num,
         "rho_num": {"type": "integer", "minimum": 1}, "y_values": _num_list, "y_start": _num, "y_stop": _num,
         "y_num": {"type": "integer", "minimum": 1}, "p_laser_dbm": _num,
         "excess_loss_db": {"type": "number", "minimum": 0}, "tol": _pos},
        {
            "y_axis": "p_laser_dbm | irnd | rin_db_hz (p_laser_dbm)",
            "rho_values | rho_start/rho_stop/rho_num": "split-ratio grid (0.05..0.95, 91 points)",
            "y_values | y_start/y_stop/y_num": "second grid axis; irnd in pA/sqrt(Hz)",
            "p_laser_dbm": "total laser power before the splitter, dBm (16)",
            "excess_loss_db": "splitter excess loss, dB (0)",
            "tol": "split optimizer tolerance (1e-4)",
        },
    ),
    "fit": _obj(
        {"curves_csv": {"type": "string"}, "tia_csv": {"type": "string"}, "rin_db_hz": _num,
         "init": {"type": "object", "additionalProperties": False,
                  "properties": {k: _num for k in calibration.PARAM_NAMES}},
         "bounds": {"type": "object", "additionalProperties": False,
                    "properties": {k: {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
                                   for k in calibration.PARAM_NAMES}},
         "max_nfev": {"type": "integer", "minimum": 1}, "tia_ref_bandwidth_hz": _pos},
        {
            "curves_csv": "BER curves, header format,baud_hz,lo_power_dbm,signal_power_dbm,ber",
            "tia_csv": "TIA data, header bandwidth_hz,irnd_pa_sqrthz",
            "rin_db_hz": "fixed LO RIN during the receiver fit (-145)",
            "init": "start values r_a_per_w, cmrr_db, itia_pa_sqrthz, snrq_db",
            "bounds": "[low, high] per fitted parameter",
            "max_nfev": "function-evaluation cap per solve (2000)",
            "tia_ref_bandwidth_hz": "bandwidth at which i0 is reported (22e9)",
        },
    ),
    "mc": _obj(
        {"formats": {"type": "array", "items": _fmt}, "snr_db": _num_list, "ber_grid": _num_list,
         "n_symbols": {"type": "integer", "minimum": 1}},
        {
            "formats": "formats to validate (all three)",
            "snr_db": "SNR grid, dB",
            "ber_grid": "alternative: formula-BER grid converted per format ([1e-2, 4e-3, 1e-3])",
            "n_symbols": "symbols per point (1e6)",
        },
    ),
    "io": _obj(
        {"out": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
        {"out": "output path (stdout when absent)", "format": "csv | json (csv for tables, json for reports)"},
    ),
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {**SECTIONS, "seed": {"type": "integer", "minimum": 0}},
}

COMMANDS = {
    "opb": (("noise", "link", "io"), "optical power budget of one link"),
    "sensitivity": (("noise", "link", "io"), "receiver sensitivity of one link"),
    "sweep-laser": (("noise", "link", "sweep", "io"), "OPB versus laser power"),
    "sweep-bitrate": (("noise", "link", "sweep", "io"), "OPB versus raw bit rate"),
    "split-grid": (("noise", "link", "split", "io"), "OPB over split ratio and one more parameter"),
    "split-opt": (("noise", "link", "split", "io"), "optimal split ratio of a shared-laser transceiver"),
    "fit-rx": (("fit", "io"), "fit receiver noise parameters to BER curves"),
    "fit-tia": (("fit", "io"), "fit the TIA noise power law"),
    "mc-validate": (("mc", "io"), "Monte-Carlo check of the BER formulas"),
}


class ConfigError(ValueError):
    pass


def _inf(v):
    return float(v) if not isinstance(v, str) else (math.inf if v == "inf" else -math.inf)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path}: {where}: {exc.message}") from exc
    cfg["_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def noise_params(cfg: dict) -> model.NoiseParams:
    n = cfg.get("noise", {})
    t = model.TABLE1_PARAMS
    return model.NoiseParams(
        responsivity=float(n.get("responsivity_a_per_w", t.responsivity)),
        cmrr_db=_inf(n.get("cmrr_db", t.cmrr_db)),
        irnd=float(n.get("itia_pa_sqrthz", t.irnd * 1e12)) * 1e-12,
        snrq_db=_inf(n.get("snrq_db", t.snrq_db)),
        rin_db_hz=_inf(n.get("rin_db_hz", t.rin_db_hz)),
    )


def _ber_target(block: dict, default=None):
    if "ber_target" in block and "fec" in block:
        raise ConfigError("give either ber_target or fec, not both")
    if "fec" in block:
        return model.HD_FEC_BER if block["fec"] == "HD" else model.SD_FEC_BER
    return block.get("ber_target", default)


def _loss(block: dict, fmt, n_pol, default=None):
    if "modulator_loss_db" in block and "m_index" in block:
        raise ConfigError("give either modulator_loss_db or m_index, not both")
    if "m_index" in block:
        return budget.modulator_loss(fmt, block["m_index"])
    if "modulator_loss_db" in block:
        return float(block["modulator_loss_db"])
    return default if default is not None else budget.default_modulator_loss(fmt, n_pol)


def link_config(cfg: dict) -> budget.LinkConfig:
    b = cfg.get("link", {})
    fmt = model.get_format(b.get("format", "QPSK"))
    n_pol = b.get("n_pol", 2)
    kw = {k: b[k] for k in ("snrq_policy", "snrq_ref_baud_hz", "tia_policy", "tia_exponent",
                            "tia_ref_bandwidth_hz") if k in b}
    return budget.LinkConfig(
        fmt=fmt,
        n_pol=n_pol,
        baud_hz=float(b.get("baud_hz", 28e9)),
        laser_power_dbm=float(b.get("laser_power_dbm", 14.0)),
        modulator_loss_db=_loss(b, fmt, n_pol),
        ber_target=_ber_target(b, model.HD_FEC_BER),
        **kw,
    )


def _case_overrides(case: dict, base: budget.LinkConfig) -> dict:
    out = {}
    fmt = model.get_format(case.get("format", base.fmt))
    n_pol = case.get("n_pol", base.n_pol)
    if "format" in case:
        out["fmt"] = fmt
    if "n_pol" in case:
        out["n_pol"] = n_pol
    if "baud_hz" in case:
        out["baud_hz"] = float(case["baud_hz"])
    ber = _ber_target(case)
    if ber is not None:
        out["ber_target"] = ber
    if "modulator_loss_db" in case or "m_index" in case or "format" in case or "n_pol" in case:
        out["modulator_loss_db"] = _loss(case, fmt, n_pol)
    return out


def _grid(block: dict, prefix: str, default=None, step_key=None):
    if f"{prefix}values" in block:
        return [float(v) for v in block[f"{prefix}values"]]
    keys = (f"{prefix}start", f"{prefix}stop")
    if all(k in block for k in keys):
        start, stop = float(block[keys[0]]), float(block[keys[1]])
        if step_key:
            if step_key not in block:
                raise ConfigError(f"{step_key} required with {keys[0]}/{keys[1]}")
            step = float(block[step_key])
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(max(n, 0))]
        num = int(block.get(f"{prefix}num", 0))
        if num < 1:
            raise ConfigError(f"{prefix}num required with {keys[0]}/{keys[1]}")
        return [start + (stop - start) * i / (num - 1) for i in range(num)] if num > 1 else [start]
    if default is None:
        raise ConfigError(f"missing {prefix}values or {prefix}start/{prefix}stop grid")
    return default


@dataclass
class Outcome:
    data: str
    summary: str
    code: int = EXIT_OK


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _num_or_none(v):
    return None if isinstance(v, model.Infeasible) else v


def cmd_opb(cfg, fmt_out):
    lb = budget.link_budget(link_config(cfg), noise_params(cfg))
    rec = {"tx_power_dbm": lb.tx_power_dbm, "lo_power_dbm": lb.lo_power_dbm,
           "sensitivity_dbm": _num_or_none(lb.sensitivity_dbm), "opb_db": _num_or_none(lb.opb_db),
           "feasible": lb.feasible}
    if lb.feasible:
        return Outcome(_dump(rec), f"opb_db={lb.opb_db:.6f}")
    return Outcome(_dump(rec), f"opb_db=infeasible ({lb.opb_db.reason})", EXIT_INFEASIBLE)


def cmd_sensitivity(cfg, fmt_out):
    lb = budget.link_budget(link_config(cfg), noise_params(cfg))
    rec = {"sensitivity_dbm": _num_or_none(lb.sensitivity_dbm), "feasible": lb.feasible}
    if lb.feasible:
        return Outcome(_dump(rec), f"sensitivity_dbm={lb.sensitivity_dbm:.6f}")
    return Outcome(_dump(rec), f"sensitivity_dbm=infeasible ({lb.sensitivity_dbm.reason})", EXIT_INFEASIBLE)


def _sweep(cfg, fmt_out, axis):
    base = link_config(cfg)
    s = dict(cfg.get("sweep", {}))
    if "axis" in s and s["axis"] != axis:
        raise ConfigError(f"sweep.axis is {s['axis']!r} but the subcommand sweeps {axis!r}")
    values = _grid(s, "", step_key="step")
    cases = [_case_overrides(c, base) for c in s.get("cases", [])]
    res = budget.sweep(budget.SweepSpec(axis, values, cases), base, noise_params(cfg))
    if fmt_out == "json":
        keys = (*budget.SWEEP_CSV_HEADER[:-1], "case", "ber_target", "feasible")
        data = _dump([{k: getattr(r, k) for k in keys} for r in res.rows])
    else:
        data = res.to_csv()
    n_ok = sum(r.feasible for r in res.rows)
    summary = f"rows={len(res.rows)} feasible={n_ok}"
    return Outcome(data, summary, EXIT_OK if n_ok else EXIT_INFEASIBLE)


def _split_setup(cfg):
    s = cfg.get("split", {})
    return (s, link_config(cfg), noise_params(cfg), float(s.get("p_laser_dbm", 16.0)),
            float(s.get("excess_loss_db", 0.0)))


def cmd_split_grid(cfg, fmt_out):
    s, link, params, p_laser, excess = _split_setup(cfg)
    y_axis = s.get("y_axis", "p_laser_dbm")
    rho = _grid(s, "rho_", default=[0.05 + 0.01 * i for i in range(91)])
    y = _grid(s, "y_")
    if y_axis == "irnd":
        y = [v * 1e-12 for v in y]
    g = split.opb_grid(rho, y_axis, y, link, params, p_laser, excess)
    if y_axis == "irnd":
        g = split.OpbGrid(g.rho, g.y_axis, g.y * 1e12, g.opb_db)
    data = g.to_csv() if fmt_out == "csv" else _dump(
        {"rho": g.rho.tolist(), "y_axis": y_axis, "y": g.y.tolist(),
         "opb_db": [[None if math.isnan(v) else v for v in row] for row in g.opb_db.tolist()]})
    n_ok = int(np.isfinite(g.opb_db).sum())
    return Outcome(data, f"cells={g.opb_db.size} feasible={n_ok}", EXIT_OK if n_ok else EXIT_INFEASIBLE)


def cmd_split_opt(cfg, fmt_out):
    s, link, params, p_laser, excess = _split_setup(cfg)
    res = split.optimize_split(p_laser, link, params, excess, tol=float(s.get("tol", 1e-4)))
    if isinstance(res, model.Infeasible):
        return Outcome(_dump({"rho_opt": None, "opb_opt_db": None, "iterations": 0}),
                       f"rho_opt=infeasible ({res.reason})", EXIT_INFEASIBLE)
    return Outcome(_dump(res.to_json_dict()), f"rho_opt={res.rho_opt:.6f} opb_opt_db={res.opb_opt_db:.6f}")


def _fit_path(cfg, key):
    f = cfg.get("fit", {})
    if key not in f:
        raise ConfigError(f"fit.{key} is required")
    return os.path.join(cfg["_dir"], f[key])


def cmd_fit_rx(cfg, fmt_out):
    f = cfg.get("fit", {})
    curves = calibration.read_ber_curves_csv(_fit_path(cfg, "curves_csv"))
    res = calibration.fit_receiver_params(
        curves,
        rin_db_hz=float(f.get("rin_db_hz", -145.0)),
        init=f.get("init"),
        bounds={k: tuple(v) for k, v in f.get("bounds", {}).items()},
        max_nfev=int(f.get("max_nfev", 2000)),
    )
    rep = res.to_json_dict()
    summary = (f"r_a_per_w={rep['r_a_per_w']:.6g} cmrr_db={rep['cmrr_db']:.4f} "
               f"itia_pa_sqrthz={rep['itia_pa_sqrthz']:.4f} snrq_db={rep['snrq_db']:.4f} "
               f"residual_rms={rep['residual_rms']:.3g}")
    if not res.converged:
        return Outcome(_dump(rep), summary + " (not converged)", EXIT_NO_CONVERGENCE)
    return Outcome(_dump(rep), summary)


def cmd_fit_tia(cfg, fmt_out):
    b0 = float(cfg.get("fit", {}).get("tia_ref_bandwidth_hz", budget.TIA_REF_BANDWIDTH_HZ))
    i0, x = calibration.fit_tia_power_law(calibration.read_tia_csv(_fit_path(cfg, "tia_csv")), b0)
    rep = {"i0_pa_sqrthz": i0 * 1e12, "exponent": x, "b0_hz": b0}
    return Outcome(_dump(rep), f"i0_pa_sqrthz={i0 * 1e12:.4f} exponent={x:.4f}")


def cmd_mc_validate(cfg, fmt_out):
    m = cfg.get("mc", {})
    seed = int(cfg.get("seed", 0))
    rows = []
    for f in m.get("formats", list(model.FORMATS)):
        fmt = model.get_format(f)
        if "snr_db" in m:
            grid = m["snr_db"]
        else:
            grid = montecarlo.snr_db_for_ber(fmt, m.get("ber_grid", [1e-2, 4e-3, 1e-3]))
        rows += montecarlo.validate_formulas(fmt, grid, int(m.get("n_symbols", 10**6)), seed)
    data = montecarlo.report_csv(rows) if fmt_out == "csv" else _dump([r.__dict__ for r in rows])
    ok = montecarlo.report_passes(rows)
    return Outcome(data, f"rows={len(rows)} pass={'true' if ok else 'false'}")


HANDLERS = {
    "opb": cmd_opb,
    "sensitivity": cmd_sensitivity,
    "sweep-laser": lambda c, f: _sweep(c, f, "laser_power_dbm"),
    "sweep-bitrate": lambda c, f: _sweep(c, f, "raw_bit_rate"),
    "split-grid": cmd_split_grid,
    "split-opt": cmd_split_opt,
    "fit-rx": cmd_fit_rx,
    "fit-tia": cmd_fit_tia,
    "mc-validate": cmd_mc_validate,
}
_DEFAULT_OUT_FORMAT = {"sweep-laser": "csv", "sweep-bitrate": "csv", "split-grid": "csv", "mc-validate": "csv"}


def _keys_help(sections) -> str:
    lines = ["config keys:"]
    for sec in sections:
        lines.append(f"  {sec}:")
        for k, doc in SECTIONS[sec]["x-doc"].items():
            lines.append(f"    {k:<34} {doc}")
    lines.append("  seed:                                integer PRNG seed (0)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cohbudget",
        description="Power budget and performance limits of unamplified coherent receivers.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (sections, desc) in COMMANDS.items():
        p = sub.add_parser(name, help=desc, description=desc, epilog=_keys_help(sections),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="JSON config file")
        p.add_argument("--out", help="output path (overrides io.out)")
        p.add_argument("--seed", type=int, help="PRNG seed (overrides seed)")
        p.add_argument("--format", choices=("csv", "json"), help="output format (overrides io.format)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        io_cfg = cfg.get("io", {})
        out = args.out or io_cfg.get("out")
        if out and not os.path.isabs(out) and not args.out:
            out = os.path.join(cfg["_dir"], out)
        fmt_out = args.format or io_cfg.get("format") or _DEFAULT_OUT_FORMAT.get(args.command, "json")
        result = HANDLERS[args.command](cfg, fmt_out)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"cohbudget {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if out:
        with open(out, "w", newline="") as fh:
            fh.write(result.data)
        print(result.summary)
    else:
        sys.stdout.write(result.data)
        print(result.summary, file=sys.stderr)
    return result.code


if __name__ == "__main__":
    sys.exit(main())
