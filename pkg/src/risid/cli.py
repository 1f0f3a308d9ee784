"""Command-line front door: flat text configs in, CSV/JSON artifacts out.

One subcommand per standard experiment (single-surface false detection,
miss-detection sweeps, two-surface curves, confusion matrices, the five
surface code-set comparison, plain theory curves and the sizing solver).
Every artifact embeds the resolved config and seed so a rerun reproduces it
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import analysis, montecarlo
from .analysis import NumericalFailure, OperatingPoint
from .channel import LinkBudget, RisGeometry, correlation_matrix, path_gain
from .codes import (
    BinarySequence,
    build_codebook,
    codebook_from_text,
    cross_corr_pmf,
    distinct_shift_fraction,
)
from .signal import RisProfile, noise_variance_from_bandwidth

__version__ = "0.1.0"

SPACINGS = ("none", "half-lambda", "tenth-lambda")


class ConfigError(Exception):
    """Invalid configuration; carries the offending line number (0 = none)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(message)
        self.line = line


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def default_code_rows(l_count: int, m: int) -> tuple:
    """Default row assignment: generic high row for one surface, else 1..L.

    A single surface gets row m-1, whose cyclic shifts are maximally
    distinct (half of them up to sign); consecutive low rows keep multi
    surface setups simple but configs may pin any rows.
    """
    if l_count == 1:
        return (m - 1,)
    return tuple(range(1, l_count + 1))


def default_n_horizontal(n: int) -> int:
    p = 1
    while (2 * p) ** 2 <= n:
        p *= 2
    return p


@dataclass(frozen=True)
class SimRis:
    """Engine view of one surface: code, size, per-hop gains, correlation."""

    id: int
    code: BinarySequence
    n: int
    beta_ur: float
    beta_rb: float
    corr_factor: np.ndarray | None


@lru_cache(maxsize=32)
def _corr_factor(n: int, n_h: int, spacing: str, wavelength: float):
    if spacing == "none":
        return None
    d = wavelength / 2.0 if spacing == "half-lambda" else wavelength / 10.0
    geom = RisGeometry(n=n, n_h=n_h, d_h=d, d_v=d, wavelength=wavelength)
    return correlation_matrix(geom).factor


@dataclass(frozen=True)
class Scenario:
    """Resolved experiment description shared by theory, engine and CLI."""

    m: int = 16
    v_total: int = 4
    code_rows: tuple = (15,)
    n_elements: int = 64
    n_horizontal: int = 8
    spacing: str = "none"
    f_c_hz: float = 1.8e9
    bandwidth_hz: float = 20e6
    p_dbm: float = 15.0
    d_ur_m: float = 10.0
    d_rb_m: float = 50.0
    r_bar: float = 3.0
    r_bar_grid: tuple = tuple(float(x) for x in range(1, 9))
    trials: int = 100000
    seed: int = 1
    per_ris: tuple = ()  # (ris index 1-based, field name, value) overrides

    def __post_init__(self):
        if self.m < 2 or (self.m & (self.m - 1)) != 0:
            raise ConfigError(f"sequence length must be a power of two, got {self.m}")
        if not 1 <= self.v_total < self.m:
            raise ConfigError("pad budget must satisfy 1 <= v_total < m")
        if len(set(self.code_rows)) != len(self.code_rows):
            raise ConfigError("code rows must be distinct across surfaces")
        for r in self.code_rows:
            if not 1 <= r < self.m:
                raise ConfigError(f"code row {r} outside 1..{self.m - 1}")
        if self.spacing not in SPACINGS:
            raise ConfigError(f"spacing must be one of {SPACINGS}")
        for k, field_name, _ in self.per_ris:
            if not 1 <= k <= len(self.code_rows):
                raise ConfigError(f"override for surface {k} outside 1..{len(self.code_rows)}")
            if field_name == "spacing":
                val = self._override(k, "spacing", self.spacing)
                if val not in SPACINGS:
                    raise ConfigError(f"spacing must be one of {SPACINGS}")
        for k in range(1, len(self.code_rows) + 1):
            n = self._override(k, "n_elements", self.n_elements)
            nh = self._override(k, "n_horizontal", self._nh_default(n))
            if n <= 0 or n % nh != 0:
                raise ConfigError(
                    f"surface {k}: element count {n} not divisible by row length {nh}"
                )

    def _nh_default(self, n: int) -> int:
        if n == self.n_elements:
            return self.n_horizontal
        return default_n_horizontal(n)

    def _override(self, k: int, field_name: str, default):
        for kk, ff, vv in self.per_ris:
            if kk == k and ff == field_name:
                return vv
        return default

    @property
    def l_count(self) -> int:
        return len(self.code_rows)

    @property
    def wavelength(self) -> float:
        return 299792458.0 / self.f_c_hz

    @property
    def power_w(self) -> float:
        return dbm_to_watts(self.p_dbm)

    @property
    def noise_variance_w(self) -> float:
        return noise_variance_from_bandwidth(self.bandwidth_hz)

    def codebook(self):
        return build_codebook(self.m, list(self.code_rows))

    def sim_profiles(self) -> tuple:
        book = self.codebook()
        out = []
        for k, code in enumerate(book.entries, start=1):
            n = self._override(k, "n_elements", self.n_elements)
            nh = self._override(k, "n_horizontal", self._nh_default(n))
            spacing = self._override(k, "spacing", self.spacing)
            d_ur = self._override(k, "d_ur_m", self.d_ur_m)
            d_rb = self._override(k, "d_rb_m", self.d_rb_m)
            beta = path_gain(self.f_c_hz, d_ur, d_rb)
            hop = math.sqrt(beta)
            out.append(SimRis(
                id=k, code=code, n=n, beta_ur=hop, beta_rb=hop,
                corr_factor=_corr_factor(n, nh, spacing, self.wavelength),
            ))
        return tuple(out)

    def reference_profiles(self) -> list:
        """RisProfile objects for the single-frame synthesizer."""
        book = self.codebook()
        out = []
        for k, code in enumerate(book.entries, start=1):
            n = self._override(k, "n_elements", self.n_elements)
            nh = self._override(k, "n_horizontal", self._nh_default(n))
            spacing = self._override(k, "spacing", self.spacing)
            d = self.wavelength / 2.0 if spacing != "tenth-lambda" else self.wavelength / 10.0
            geom = RisGeometry(n=n, n_h=nh, d_h=d, d_v=d, wavelength=self.wavelength)
            link = LinkBudget.from_distances(
                self.f_c_hz,
                self._override(k, "d_ur_m", self.d_ur_m),
                self._override(k, "d_rb_m", self.d_rb_m),
            )
            out.append(RisProfile(id=k, code=code, geometry=geom, link=link))
        return out

    def reference_correlations(self) -> dict:
        """Correlation overrides for the single-frame synthesizer.

        Surfaces with spacing "none" map to identity matrices; the others
        are left to the synthesizer's sinc kernel.
        """
        from .channel import identity_correlation

        out = {}
        for k in range(1, self.l_count + 1):
            if self._override(k, "spacing", self.spacing) == "none":
                n = self._override(k, "n_elements", self.n_elements)
                out[k] = identity_correlation(n)
        return out

    def operating_point(self, r_bar: float, surface: int = 1) -> OperatingPoint:
        book = self.codebook()
        beta = path_gain(
            self.f_c_hz,
            self._override(surface, "d_ur_m", self.d_ur_m),
            self._override(surface, "d_rb_m", self.d_rb_m),
        )
        return OperatingPoint(
            m=self.m,
            n=self._override(surface, "n_elements", self.n_elements),
            power_w=self.power_w,
            beta=beta,
            noise_var_w=self.noise_variance_w,
            v_total=self.v_total,
            r_bar=r_bar,
            rho=distinct_shift_fraction(book.entries[surface - 1]),
        )

    def pair_pmf(self, detected: int = 1, interferer: int = 2):
        book = self.codebook()
        return cross_corr_pmf(
            book.entries[detected - 1], book.entries[interferer - 1], self.v_total
        )

    def echo(self) -> dict:
        d = {
            "m": self.m, "v_total": self.v_total,
            "code_rows": ", ".join(str(r) for r in self.code_rows),
            "n_elements": self.n_elements, "n_horizontal": self.n_horizontal,
            "spacing": self.spacing, "f_c_hz": repr(self.f_c_hz),
            "bandwidth_hz": repr(self.bandwidth_hz), "p_dbm": repr(self.p_dbm),
            "d_ur_m": repr(self.d_ur_m), "d_rb_m": repr(self.d_rb_m),
            "r_bar": repr(self.r_bar),
            "r_bar_grid": ", ".join(repr(x) for x in self.r_bar_grid),
            "trials": self.trials, "seed": self.seed,
        }
        for k, f, v in self.per_ris:
            d[f"ris{k}_{f}"] = v if isinstance(v, (int, str)) else repr(v)
        return d


# --- config file parsing ----------------------------------------------------

_INT_KEYS = {"m", "v_total", "n_elements", "n_horizontal", "trials", "seed"}
_FLOAT_KEYS = {
    "f_c_hz", "bandwidth_hz", "p_dbm", "d_ur_m", "d_rb_m", "r_bar",
    "target_pf", "target_pmiss",
}
_STR_KEYS = {"spacing", "codebook_file"}
_INT_LIST_KEYS = {"code_rows", "m_values", "n_values"}
_FLOAT_LIST_KEYS = {"r_bar_grid", "p_dbm_values"}
_PER_RIS_FIELDS = {
    "n_elements": int, "n_horizontal": int, "spacing": str,
    "d_ur_m": float, "d_rb_m": float,
}


def _parse_int(tok: str, line: int) -> int:
    try:
        f = float(tok)
    except ValueError:
        raise ConfigError(f"expected an integer, got {tok!r}", line)
    if f != int(f):
        raise ConfigError(f"expected an integer, got {tok!r}", line)
    return int(f)


def _parse_float(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ConfigError(f"expected a number, got {tok!r}", line)


def _parse_float_list(tok: str, line: int) -> tuple:
    tok = tok.strip()
    if ":" in tok:
        parts = tok.split(":")
        if len(parts) != 3:
            raise ConfigError("ranges take the form start:stop:step", line)
        a, b, s = (_parse_float(p, line) for p in parts)
        if s <= 0 or b < a:
            raise ConfigError("range needs stop >= start and step > 0", line)
        count = int(round((b - a) / s)) + 1
        vals = tuple(a + i * s for i in range(count) if a + i * s <= b + 1e-12)
        return vals
    return tuple(_parse_float(p, line) for p in tok.split(","))


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a typed dict; line-anchored errors."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if key in _INT_KEYS:
            out[key] = _parse_int(val, lineno)
        elif key in _FLOAT_KEYS:
            out[key] = _parse_float(val, lineno)
        elif key in _STR_KEYS:
            out[key] = val
        elif key in _INT_LIST_KEYS:
            out[key] = tuple(_parse_int(p, lineno) for p in val.split(","))
        elif key in _FLOAT_LIST_KEYS:
            out[key] = _parse_float_list(val, lineno)
        elif key.startswith("ris") and "_" in key:
            head, field_name = key.split("_", 1)
            try:
                idx = int(head[3:])
            except ValueError:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if field_name not in _PER_RIS_FIELDS:
                raise ConfigError(f"unknown per-surface field {field_name!r}", lineno)
            caster = _PER_RIS_FIELDS[field_name]
            if caster is int:
                v = _parse_int(val, lineno)
            elif caster is float:
                v = _parse_float(val, lineno)
            else:
                v = val
            out.setdefault("per_ris", []).append((idx, field_name, v))
        elif key == "l_count":
            out[key] = _parse_int(val, lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)
    return out


def scenario_from_config(raw: dict, config_dir: Path | None = None) -> Scenario:
    """Resolve a parsed config dict into a validated Scenario."""
    raw = dict(raw)
    m = raw.get("m", 16)
    if "codebook_file" in raw:
        path = Path(raw.pop("codebook_file"))
        if config_dir is not None and not path.is_absolute():
            path = config_dir / path
        try:
            book = codebook_from_text(path.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load codebook: {exc}")
        raw["code_rows"] = book.rows
        raw.setdefault("m", book.m)
        if raw["m"] != book.m:
            raise ConfigError("codebook length disagrees with the configured m")
        m = book.m
    l_count = raw.pop("l_count", None)
    if "code_rows" not in raw:
        raw["code_rows"] = default_code_rows(l_count or 1, m)
    elif l_count is not None and l_count != len(raw["code_rows"]):
        raise ConfigError("l_count disagrees with the number of code rows")
    raw.setdefault("m", m)
    raw.setdefault("v_total", max(1, math.ceil(raw["m"] / 4)))
    if "n_elements" in raw and "n_horizontal" not in raw:
        raw["n_horizontal"] = default_n_horizontal(raw["n_elements"])
    raw.pop("m_values", None)
    raw.pop("n_values", None)
    raw.pop("p_dbm_values", None)
    raw.pop("target_pf", None)
    raw.pop("target_pmiss", None)
    if "per_ris" in raw:
        raw["per_ris"] = tuple(raw["per_ris"])
    try:
        return Scenario(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc))


def rescale(scenario: Scenario, **changes) -> Scenario:
    """Vary m/n/p across sweeps, keeping dependent defaults consistent."""
    if "m" in changes and changes["m"] != scenario.m:
        m = changes["m"]
        changes.setdefault("v_total", max(1, math.ceil(m / 4)))
        if scenario.l_count == 1:
            changes.setdefault("code_rows", (m - 1,))
        else:
            changes.setdefault("code_rows", scenario.code_rows)
    if "n_elements" in changes and changes["n_elements"] != scenario.n_elements:
        changes.setdefault("n_horizontal", default_n_horizontal(changes["n_elements"]))
    return replace(scenario, **changes)


# --- artifact writing -------------------------------------------------------

def _echo_lines(echo: dict) -> list:
    return [f"# {k} = {echo[k]}" for k in sorted(echo)]


def write_csv(path: Path, header: list, rows: list, echo: dict) -> None:
    lines = _echo_lines(echo) + [f"# version = {__version__}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(
            repr(float(v)) if isinstance(v, float) else str(v) for v in row
        ))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict, echo: dict) -> None:
    doc = {"config": echo, "version": __version__}
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


class RunWriter:
    """Collects artifact names and finishes with a reproducibility manifest."""

    def __init__(self, outdir: Path, subcommand: str, echo: dict):
        self.outdir = outdir
        self.subcommand = subcommand
        self.echo = echo
        self.outputs: list = []
        outdir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: list, rows: list) -> None:
        write_csv(self.outdir / name, header, rows, self.echo)
        self.outputs.append(name)

    def json(self, name: str, payload: dict) -> None:
        write_json(self.outdir / name, payload, self.echo)
        self.outputs.append(name)

    def manifest(self) -> None:
        doc = {
            "subcommand": self.subcommand,
            "version": __version__,
            "config": self.echo,
            "outputs": sorted(self.outputs),
        }
        (self.outdir / "manifest.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n"
        )


# --- subcommands ------------------------------------------------------------

def _estimate_row(prefix: list, est: montecarlo.Estimate) -> list:
    return prefix + [
        est.value, est.ci_low, est.ci_high, est.events, est.trials,
        int(est.low_confidence),
    ]


_EST_COLS = ["value", "ci_low", "ci_high", "events", "trials", "low_confidence"]


def cmd_theory(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Closed-form curves over the threshold grid (no simulation)."""
    op = scenario.operating_point(scenario.r_bar)
    pf_c, pm_c, _ = analysis.pf_pmiss_threshold_sweep(op, scenario.r_bar_grid)
    curves = [pf_c, pm_c]
    if scenario.l_count >= 2:
        pf2, pm2, _ = analysis.pf_pmiss_threshold_sweep(
            op, scenario.r_bar_grid, pmf=scenario.pair_pmf(1, 2)
        )
        curves += [pf2, pm2]
    rows = []
    for curve in curves:
        for xv, yv in zip(curve.x, curve.y):
            rows.append([xv, yv, curve.kind, op.m, op.n, scenario.p_dbm])
    writer.csv("theory.csv", ["r_bar", "value", "kind", "M", "N", "P_dBm"], rows)


def cmd_pf_single(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Noise-only false-detection rate vs threshold, with the union bound."""
    rows = []
    for m in raw.get("m_values", (scenario.m,)):
        scn = rescale(scenario, m=m)
        op = scn.operating_point(scn.r_bar)
        plan = montecarlo.TrialPlan(
            scenario=scn, trials=scn.trials, seed=scn.seed, threads=threads,
            reachability_law={i: False for i in range(1, scn.l_count + 1)},
        )
        ests = montecarlo.decision_sweep(
            plan, 1, scn.r_bar_grid, {1: False}, count_missed=False
        )
        for rb, est in zip(scn.r_bar_grid, ests):
            rows.append(_estimate_row(["mc", m, rb], est))
        for rb in scn.r_bar_grid:
            bound = analysis.pf_single_bound(op.at(r_bar=rb))
            rows.append(["bound", m, rb, bound, "", "", "", "", ""])
    writer.csv("pf_single.csv", ["kind", "m", "r_bar"] + _EST_COLS, rows)


def _pmiss_power_sweep(scenario, raw, writer, name, vary):
    """Shared body of the miss-vs-power subcommands."""
    rows = []
    p_values = raw.get("p_dbm_values", (scenario.p_dbm,))
    for v in vary["values"](raw, scenario):
        for p_dbm in p_values:
            scn = vary["apply"](scenario, v, p_dbm)
            plan = montecarlo.TrialPlan(
                scenario=scn, trials=scn.trials, seed=scn.seed,
                threads=vary["threads"],
            )
            est = montecarlo.decision_sweep(
                plan, 1, (scn.r_bar,), {1: True}, count_missed=True
            )[0]
            rows.append(_estimate_row(["mc", v, p_dbm], est))
            theory = analysis.pmiss_single(scn.operating_point(scn.r_bar))
            rows.append(["theory", v, p_dbm, theory, "", "", "", "", ""])
    writer.csv(name, ["kind", vary["column"], "p_dbm"] + _EST_COLS, rows)


def cmd_pmiss_corr(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Miss rate vs power for each element-spacing mode, plus theory."""
    vary = {
        "values": lambda r, s: SPACINGS,
        "apply": lambda s, v, p: rescale(s, spacing=v, p_dbm=p),
        "column": "spacing",
        "threads": threads,
    }
    _pmiss_power_sweep(scenario, raw, writer, "pmiss_corr.csv", vary)


def cmd_pmiss_m(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Miss rate vs power for each sequence length, plus theory."""
    vary = {
        "values": lambda r, s: r.get("m_values", (s.m,)),
        "apply": lambda s, v, p: rescale(s, m=v, p_dbm=p),
        "column": "m",
        "threads": threads,
    }
    _pmiss_power_sweep(scenario, raw, writer, "pmiss_m.csv", vary)


def cmd_pmiss_n(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Miss rate vs power for each surface size, plus theory."""
    vary = {
        "values": lambda r, s: r.get("n_values", (s.n_elements,)),
        "apply": lambda s, v, p: rescale(s, n_elements=v, p_dbm=p),
        "column": "n",
        "threads": threads,
    }
    _pmiss_power_sweep(scenario, raw, writer, "pmiss_n.csv", vary)


def _two_ris_sweep(miss: bool, combos, threads: int):
    rows = []
    for label_cols, scn in combos:
        if scn.l_count < 2:
            raise ConfigError("two-surface experiments need at least two code rows")
        plan = montecarlo.TrialPlan(
            scenario=scn, trials=scn.trials, seed=scn.seed, threads=threads,
        )
        forced = {1: True} if miss else {1: False}
        ests = montecarlo.decision_sweep(
            plan, 1, scn.r_bar_grid, forced, count_missed=miss
        )
        pmf = scn.pair_pmf(1, 2)
        op = scn.operating_point(scn.r_bar)
        for rb, est in zip(scn.r_bar_grid, ests):
            rows.append(_estimate_row(["mc"] + label_cols + [rb], est))
        for rb in scn.r_bar_grid:
            if miss:
                theory = analysis.pmiss_two(op.at(r_bar=rb), pmf.a_tilde)
            else:
                theory = analysis.pf_two(op.at(r_bar=rb), pmf)
            rows.append(["theory"] + label_cols + [rb, theory, "", "", "", "", ""])
    return rows


def cmd_pf_two_m(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Two-surface false detection vs threshold across sequence lengths."""
    combos = [
        ([m], rescale(scenario, m=m)) for m in raw.get("m_values", (scenario.m,))
    ]
    rows = _two_ris_sweep(False, combos, threads)
    writer.csv("pf_two_m.csv", ["kind", "m", "r_bar"] + _EST_COLS, rows)


def cmd_pf_two_np(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Two-surface false detection vs threshold across sizes and powers."""
    combos = [
        ([n, p], rescale(scenario, n_elements=n, p_dbm=p))
        for n in raw.get("n_values", (scenario.n_elements,))
        for p in raw.get("p_dbm_values", (scenario.p_dbm,))
    ]
    rows = _two_ris_sweep(False, combos, threads)
    writer.csv("pf_two_np.csv", ["kind", "n", "p_dbm", "r_bar"] + _EST_COLS, rows)


def cmd_pmiss_two_m(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Two-surface miss detection vs threshold across sequence lengths."""
    combos = [
        ([m], rescale(scenario, m=m)) for m in raw.get("m_values", (scenario.m,))
    ]
    rows = _two_ris_sweep(True, combos, threads)
    writer.csv("pmiss_two_m.csv", ["kind", "m", "r_bar"] + _EST_COLS, rows)


def cmd_pmiss_two_np(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Two-surface miss detection vs threshold across sizes and powers."""
    combos = [
        ([n, p], rescale(scenario, n_elements=n, p_dbm=p))
        for n in raw.get("n_values", (scenario.n_elements,))
        for p in raw.get("p_dbm_values", (scenario.p_dbm,))
    ]
    rows = _two_ris_sweep(True, combos, threads)
    writer.csv("pmiss_two_np.csv", ["kind", "n", "p_dbm", "r_bar"] + _EST_COLS, rows)


def cmd_tradeoff(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Theory false/miss curves for both surfaces plus a joint threshold pick."""
    if scenario.l_count < 2:
        raise ConfigError("the tradeoff chart needs at least two code rows")
    pf_cap = raw.get("target_pf", 1.0)
    pmiss_cap = raw.get("target_pmiss", 1.0)
    rows = []
    feasible = True
    picks = {}
    for surf, other in ((1, 2), (2, 1)):
        op = scenario.operating_point(scenario.r_bar, surface=surf)
        pmf = scenario.pair_pmf(surf, other)
        pf_c, pm_c, sel = analysis.pf_pmiss_threshold_sweep(
            op, scenario.r_bar_grid, pmf=pmf, pf_cap=pf_cap, pmiss_cap=pmiss_cap
        )
        for rb, v in zip(pf_c.x, pf_c.y):
            rows.append([f"pf_two_ris{surf}", rb, v])
        for rb, v in zip(pm_c.x, pm_c.y):
            rows.append([f"pmiss_two_ris{surf}", rb, v])
        feasible = feasible and sel.feasible
        picks[f"ris{surf}"] = {
            "r_bar_for_pf_cap": sel.r_bar_for_pf_cap,
            "r_bar_for_pmiss_cap": sel.r_bar_for_pmiss_cap,
            "feasible": sel.feasible,
        }
    writer.csv("tradeoff.csv", ["kind", "r_bar", "value"], rows)
    writer.json("tradeoff_selection.json", {
        "pf_cap": pf_cap, "pmiss_cap": pmiss_cap, "feasible": feasible,
        "per_surface": picks,
    })


def cmd_confusion(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Reachability confusion matrices at each grid threshold."""
    if scenario.l_count != 2:
        raise ConfigError("confusion matrices are defined for exactly two surfaces")
    plan = montecarlo.TrialPlan(
        scenario=scenario, trials=scenario.trials, seed=scenario.seed,
        threads=threads,
    )
    mats = montecarlo.confusion(plan, scenario.r_bar_grid)
    payload = {}
    for rb, mat in sorted(mats.items()):
        freq = mat.frequencies()
        payload[repr(rb)] = {
            "labels": list(mat.labels),
            "counts": mat.counts.tolist(),
            "frequencies": [[float(v) for v in row] for row in freq],
            "pmiss": [float(mat.miss_probability(s)) for s in (1, 2)],
            "pf": [float(mat.false_probability(s)) for s in (1, 2)],
            "trials": mat.trials,
        }
        grid_rows = [
            [mat.labels[i]] + [float(freq[i, j]) for j in range(freq.shape[1])]
            for i in range(freq.shape[0])
        ]
        writer.csv(
            f"confusion_rbar_{rb:g}.csv",
            ["true_state"] + list(mat.labels),
            grid_rows,
        )
    writer.json("confusion.json", {"matrices": payload})


def cmd_five_ris(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Averaged miss/false rates vs threshold for a five-surface code set."""
    if scenario.l_count != 5:
        raise ConfigError("the five-surface experiment needs exactly five code rows")
    plan = montecarlo.TrialPlan(
        scenario=scenario, trials=scenario.trials, seed=scenario.seed,
        threads=threads,
    )
    metrics = montecarlo.averaged_metrics(plan, scenario.r_bar_grid)
    rows = []
    for m in metrics:
        rows.append(
            [m.r_bar, m.avg_pmiss, m.avg_pf]
            + list(m.per_ris_pmiss) + list(m.per_ris_pf)
        )
    header = ["r_bar", "avg_pmiss", "avg_pf"]
    header += [f"pmiss_ris{i}" for i in range(1, 6)]
    header += [f"pf_ris{i}" for i in range(1, 6)]
    writer.csv("five_ris.csv", header, rows)


def cmd_design(scenario: Scenario, raw: dict, writer: RunWriter, threads: int) -> None:
    """Surface size required to meet a miss-probability target."""
    target = raw.get("target_pmiss")
    if target is None:
        raise ConfigError("the design solver needs target_pmiss in the config")
    op = scenario.operating_point(scenario.r_bar)
    req = analysis.required_ris_size(op, target)
    writer.json("design.json", {
        "target_pmiss": target,
        "r_bar": scenario.r_bar,
        "n_required": req.n_required,
        "n_raw": req.raw,
        "pmiss_at_raw": analysis.pmiss_single(op.at(n=max(1, req.n_required))),
    })


COMMANDS = {
    "pf-single": (cmd_pf_single, "single-surface false detection vs threshold (CSV: kind,m,r_bar,value,ci,events)"),
    "pmiss-corr": (cmd_pmiss_corr, "miss detection vs power per spacing mode (CSV: kind,spacing,p_dbm,value,ci)"),
    "pmiss-m": (cmd_pmiss_m, "miss detection vs power per sequence length (CSV: kind,m,p_dbm,value,ci)"),
    "pmiss-n": (cmd_pmiss_n, "miss detection vs power per surface size (CSV: kind,n,p_dbm,value,ci)"),
    "pf-two-m": (cmd_pf_two_m, "two-surface false detection vs threshold per length (CSV: kind,m,r_bar,value,ci)"),
    "pf-two-np": (cmd_pf_two_np, "two-surface false detection vs threshold per size/power (CSV: kind,n,p_dbm,r_bar,value,ci)"),
    "pmiss-two-m": (cmd_pmiss_two_m, "two-surface miss detection vs threshold per length (CSV: kind,m,r_bar,value,ci)"),
    "pmiss-two-np": (cmd_pmiss_two_np, "two-surface miss detection vs threshold per size/power (CSV: kind,n,p_dbm,r_bar,value,ci)"),
    "tradeoff": (cmd_tradeoff, "joint false/miss theory curves and threshold selection (CSV + JSON)"),
    "confusion": (cmd_confusion, "reachability confusion matrices per threshold (JSON + CSV grids)"),
    "five-ris": (cmd_five_ris, "averaged miss/false rates for a five-surface code set (CSV)"),
    "theory": (cmd_theory, "closed-form curves only (CSV: r_bar,value,kind,M,N,P_dBm)"),
    "design": (cmd_design, "required surface size for a miss target (JSON)"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risid",
        description="Deterministic link-level experiments for surface identification.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", type=Path, default=None, help="flat key = value config file")
        p.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--trials", type=int, default=None, help="override the config trial count")
        p.add_argument(
            "--threads", type=int,
            default=int(os.environ.get("RISID_THREADS", "1")),
            help="worker threads for simulation blocks (default RISID_THREADS or 1)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            raw = parse_config_text(args.config.read_text())
            config_dir = args.config.parent
        else:
            raw, config_dir = {}, None
        scenario = scenario_from_config(raw, config_dir)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        if args.trials is not None:
            scenario = replace(scenario, trials=args.trials)
        echo = scenario.echo()
        for key in ("m_values", "n_values", "p_dbm_values"):
            if key in raw:
                echo[key] = ", ".join(str(v) for v in raw[key])
        for key in ("target_pf", "target_pmiss"):
            if key in raw:
                echo[key] = repr(raw[key])
        writer = RunWriter(args.out, args.subcommand, echo)
        COMMANDS[args.subcommand][0](scenario, raw, writer, args.threads)
        writer.manifest()
    except ConfigError as exc:
        anchor = f"{args.config}:{exc.line}: " if exc.line else ""
        print(f"{anchor}config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc} {exc.diagnostics}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
