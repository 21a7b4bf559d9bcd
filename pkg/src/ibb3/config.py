"""Run-configuration files: ``[section]`` headers, ``key = value`` lines.

Values carry SI unit suffixes (``75uH``, ``140kHz``, ``30mOhm``); the
parser validates every key against the published schema and rejects
unknown keys with their line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class ConfigError(ValueError):
    def __init__(self, msg, line=None, col=None):
        loc = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + loc)
        self.line = line
        self.col = col


_SI_PREFIX = {"G": 1e9, "M": 1e6, "k": 1e3, "": 1.0, "m": 1e-3,
              "u": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15}
_UNITS = ["Ohm", "ohm", "Hz", "H", "F", "V", "A", "W", "s", "K/W", "T",
          "L", "l", "C", "J", "m"]
# non-prefixable units with an inherent scale (areas, volumes stay SI;
# L is liters by definition of the cooling spec)
_SCALED_UNITS = {"m2": 1.0, "mm2": 1e-6, "cm2": 1e-4,
                 "m3": 1.0, "mm3": 1e-9, "cm3": 1e-6}

_QTY_RE = re.compile(r"^([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z/0-9]*)$")


def parse_si(text: str) -> float:
    """Parse ``140kHz`` / ``75uH`` / ``13.6mm2`` style quantities to SI."""
    m = _QTY_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a quantity: {text!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    if not suffix:
        return value
    if suffix in _SCALED_UNITS:
        return value * _SCALED_UNITS[suffix]
    for unit in sorted(_UNITS, key=len, reverse=True):
        if suffix.endswith(unit):
            prefix = suffix[: -len(unit)]
            if prefix in _SI_PREFIX:
                return value * _SI_PREFIX[prefix]
            break
    if suffix in _SI_PREFIX:
        return value * _SI_PREFIX[suffix]
    raise ValueError(f"unknown unit suffix {suffix!r} in {text!r}")


# schema: section -> key -> type tag ("q" quantity, "s" string, "b" bool,
# "i" int, "list" list of quantities)
SCHEMA = {
    "run": {"topology": "s", "workflow": "s", "horizon_periods": "q",
            "settle_periods": "q", "dt_factor": "q", "seed": "i"},
    "operating_point": {"v_dc": "q", "v_ac_hat": "q", "v_ac_rms": "q",
                        "p_out": "q", "f_o": "q", "f_s": "q", "f_s_max": "q"},
    "converter": {"l_bb": "q", "c_ac": "q", "c_dc": "q", "l_f": "q",
                  "r_load_dc": "q", "c_oss": "q", "r_ds_on": "q",
                  "n_par": "i", "dead_time": "q", "min_on_time": "q"},
    "modulation": {"scheme": "s", "schemes": "s", "cm_margin": "q",
                   "include_cap_current": "b", "samples": "i"},
    "controller": {"v_dc_ref": "q", "bw_inner": "q", "bw_ratio": "q",
                   "bw_pll": "q", "smoothing": "b", "v_var": "q",
                   "kp_vdc": "q", "ki_vdc": "q", "kp_ig": "q", "ki_ig": "q",
                   "kp_vc": "q", "ki_vc": "q", "kp_il": "q", "ki_il": "q"},
    "simulation": {"diode_drop": "q", "esr_c_ac": "q", "r_grid": "q",
                   "ac_diodes": "b", "l_load": "q", "r_load_ac": "q",
                   "emf_hat": "q", "r_ac_dcdc": "q", "duty": "q"},
    "sweep": {"l_values": "list", "v_dc_min": "q", "v_dc_max": "q",
              "v_dc_steps": "i"},
    "requirements": {"thd_max": "q", "pf_min": "q", "v_dc_tol": "q"},
    "thermal": {"t_j_max": "q", "t_amb": "q", "p_tot_hb": "q", "split": "q",
                "r_jc": "q", "r_ca_min": "q", "n_hb": "i", "t_bench": "q",
                "l_via": "q", "k_cu": "q", "k_s": "q", "r_out": "q",
                "r_in": "q", "d_pad": "q", "lambda_pad": "q", "a_pad": "q",
                "n_vias": "i"},
    "cooling": {"cspi": "q", "v2": "q", "n_fans": "i"},
    "calorimetric": {"v_dc_max": "q", "i_ss_hat": "q", "i_hs_hat": "q",
                     "e_ss_per_device": "q", "e_hs_per_device": "q",
                     "r_ds_on": "q", "c_dc": "q", "duty": "q",
                     "dead_time": "q", "n_par": "i", "n_hb": "i",
                     "r_jc_pd": "q", "r_chs_pd": "q", "t_amb": "q",
                     "t_j_max": "q", "t_br_min": "q", "t_br_max": "q",
                     "t_br_rise": "q", "t_min": "q", "s_rho": "q",
                     "l_br": "q", "w_br": "q"},
    "inductor": {"core_db": "s", "l_nominal": "q",
                 "n_turns_min": "i", "n_turns_max": "i", "p_loss_max": "q",
                 "selection_rule": "s"},
}


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)
    path: str = ""

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section, key):
        try:
            return self.sections[section][key]
        except KeyError:
            raise ConfigError(f"missing required key [{section}] {key}")

    def has(self, section):
        return section in self.sections


def parse_config(text: str, path: str = "") -> RunConfig:
    cfg = RunConfig(path=path)
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", ln,
                                  raw.index("[") + 1)
            section = stripped[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", ln,
                                  raw.index("[") + 1)
            cfg.sections.setdefault(section, {})
            continue
        if "=" not in stripped:
            raise ConfigError("expected key = value", ln, 1)
        if section is None:
            raise ConfigError("key outside any [section]", ln, 1)
        key, val = (part.strip() for part in stripped.split("=", 1))
        col = raw.index(key) + 1
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", ln, col)
        kind = SCHEMA[section][key]
        try:
            if kind == "q":
                parsed = parse_si(val)
            elif kind == "i":
                parsed = int(val)
            elif kind == "b":
                if val.lower() not in ("true", "false", "on", "off", "1", "0"):
                    raise ValueError("expected boolean")
                parsed = val.lower() in ("true", "on", "1")
            elif kind == "list":
                parsed = [parse_si(v.strip()) for v in val.split(",") if v.strip()]
            else:
                parsed = val
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", ln, col)
        cfg.sections[section][key] = parsed
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def operating_point_from(cfg: RunConfig):
    from .core import OperatingPoint
    sec = cfg.sections.get("operating_point", {})
    v_hat = sec.get("v_ac_hat")
    if v_hat is None and "v_ac_rms" in sec:
        v_hat = sec["v_ac_rms"] * 2.0 ** 0.5
    if v_hat is None:
        raise ConfigError("need v_ac_hat or v_ac_rms in [operating_point]")
    return OperatingPoint(v_dc=cfg.require("operating_point", "v_dc"),
                          v_ac_hat=v_hat,
                          p_out=cfg.require("operating_point", "p_out"),
                          f_o=cfg.require("operating_point", "f_o"),
                          f_s=cfg.require("operating_point", "f_s"),
                          f_s_max=sec.get("f_s_max", 0.0))


def converter_params_from(cfg: RunConfig):
    from .core import ConverterParams
    sec = cfg.sections.get("converter", {})
    return ConverterParams(
        l_bb=cfg.require("converter", "l_bb"),
        c_ac=cfg.require("converter", "c_ac"),
        c_dc=cfg.require("converter", "c_dc"),
        l_f=sec.get("l_f", 0.0),
        r_load_dc=sec.get("r_load_dc", 0.0),
        c_oss=sec.get("c_oss", 0.0),
        r_ds_on=sec.get("r_ds_on", 0.0),
        n_par=sec.get("n_par", 1),
        dead_time=sec.get("dead_time", 0.0),
        min_on_time=sec.get("min_on_time", 0.0))
