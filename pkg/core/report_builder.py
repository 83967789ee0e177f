"""
core/report_builder.py — bfree-lab
====================================
Run configuration, subcommand dispatch and report serialization shared by
scripts/bfree.py and the Streamlit pages.

Responsibilities:
- RunConfig: defaults, JSON config files, flag overrides, validation, echo
- run_subcommand(): sieve / density / filtration / mef / classify / window /
  crt / phi / reproduce, each returning a Report
- Report serializers: human-readable table (default), key-sorted JSON, CSV
  of the per-stage table via pandas

JSON rules: integers above 2^53 and every s_k / c_k / d_k are decimal
strings; Fractions are "p/q" strings; timing lives in its own section and is
left out of the deterministic payload unless asked for.

DO NOT print or configure logging here. scripts/bfree.py owns the terminal.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from io import StringIO
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from core.bset_families import BSet, default_horizon, make_bset
from core.crt_coding import (
    DEFAULT_RULES,
    CylinderSpec,
    HPoint,
    UnresolvedCoordinateError,
    block_containment_check,
    bfree_crt_search,
    crt_solve,
    phi_block,
    theta_of_block,
)
from core.density_lab import (
    DensityCapError,
    davenport_erdos_trace,
    exact_density_of_multiples,
    interval_density,
    light_tails_trace,
    log_density_partial,
)
from core.filtration_engine import (
    DEFAULT_CONFIRM,
    DEFAULT_DEPTH,
    DEFAULT_LOOKAHEAD,
    MODES,
    FiltrationTable,
    build_filtration,
    compute_dk,
    mef_descriptor,
    period_branching,
)
from core.interval_sieve import sieve_eta
from core.window_classifier import (
    BOUNDARY_THRESHOLD,
    COPRIME_CHAIN_THRESHOLD,
    REGULARITY_RATIO,
    classify,
    dense_orbit_evidence,
    haar_regularity_scan,
    toeplitz_positions,
    window_measures,
)

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

SUBCOMMANDS = ("sieve", "density", "filtration", "mef", "classify", "window", "crt", "phi", "reproduce")
FORMATS = ("table", "json", "csv")
JSON_SAFE_INT: int = 2 ** 53
BITS_INLINE_LIMIT: int = 10_000          # sieve/phi bit strings longer than this are summarized
DEFAULT_SEARCH_RADIUS: int = 10 ** 6     # η window [-R, R] for dominance searches
BIG_INT_KEYS = frozenset({"s_k", "c_k", "d_k", "quotient", "modulus", "period"})


class ConfigError(ValueError):
    """Invalid run configuration or residue list."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    bset: dict[str, Any] = field(default_factory=lambda: {"family": "primes", "params": {}})
    horizon: int = field(default_factory=default_horizon)
    depth: int = DEFAULT_DEPTH
    mode: str = "blocks"
    lookahead: int = DEFAULT_LOOKAHEAD
    confirm: int = DEFAULT_CONFIRM
    chain_threshold: int = COPRIME_CHAIN_THRESHOLD
    boundary_threshold: float = BOUNDARY_THRESHOLD
    regularity_ratio: float = REGULARITY_RATIO
    output_format: str = "table"
    lo: int = 0
    hi: int = 100
    cutoffs: list[int] = field(default_factory=lambda: [10, 100, 1_000, 10_000])
    stage: int = 1
    periods: int = 8
    residues: dict[int, int] = field(default_factory=dict)
    default_rule: str = "zero"
    n0: int = 0
    needle: Optional[str] = None
    search_radius: int = DEFAULT_SEARCH_RADIUS
    experiment: Optional[str] = None

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        positive = ("horizon", "depth", "confirm", "chain_threshold", "stage", "periods", "search_radius")
        for name in positive:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.lookahead, int) or self.lookahead < 0:
            raise ConfigError(f"lookahead must be a non-negative integer, got {self.lookahead!r}")
        for name in ("boundary_threshold", "regularity_ratio"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value!r}")
        if self.mode not in MODES:
            raise ConfigError(f"Invalid mode '{self.mode}'. Must be one of: {', '.join(MODES)}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"Invalid format '{self.output_format}'. Must be one of: {', '.join(FORMATS)}")
        if self.default_rule not in DEFAULT_RULES:
            raise ConfigError(f"Invalid default rule '{self.default_rule}'. Must be one of: {', '.join(DEFAULT_RULES)}")
        if self.lo > self.hi:
            raise ConfigError(f"lo must be <= hi, got [{self.lo}, {self.hi}]")
        if any(not isinstance(c, int) or c < 1 for c in self.cutoffs):
            raise ConfigError(f"cutoffs must be positive integers, got {self.cutoffs!r}")
        if not isinstance(self.bset, dict) or not ({"family", "elements"} & set(self.bset)):
            raise ConfigError(f"bset must be {{'family': ..., 'params': ...}} or {{'elements': [...]}}, got {self.bset!r}")

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["residues"] = {str(b): r for b, r in self.residues.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = dict(data)
        if "residues" in values:
            values["residues"] = _coerce_residues(values["residues"])
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[dict[str, Any]] = None) -> "RunConfig":
        """Config file (JSON) merged with flag overrides; flags win."""
        data: dict[str, Any] = {}
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"config {path} must hold a JSON object")
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)

    def make_bset(self) -> BSet:
        return make_bset(self.bset)


def parse_residues(text: str) -> dict[int, int]:
    """
    "b:r,b:r" -> {b: r}.

    >>> parse_residues("4:1, 6:5")
    {4: 1, 6: 5}
    """
    out: dict[int, int] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            b, r = (int(x) for x in part.split(":"))
        except ValueError as exc:
            raise ConfigError(f"invalid residue '{part}'; expected b:r") from exc
        if b < 1:
            raise ConfigError(f"invalid residue '{part}'; modulus must be >= 1")
        if b in out:
            raise ConfigError(f"modulus {b} given twice")
        out[b] = r
    return out


def _coerce_residues(raw: Any) -> dict[int, int]:
    if isinstance(raw, str):
        return parse_residues(raw)
    if isinstance(raw, dict):
        try:
            return {int(b): int(r) for b, r in raw.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid residues {raw!r}") from exc
    raise ConfigError(f"residues must be a 'b:r' list or an object, got {raw!r}")


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class Report:
    subcommand: str
    config: dict[str, Any]
    results: dict[str, Any]
    provenance: list[str] = field(default_factory=list)
    stages: list[dict[str, Any]] = field(default_factory=list)   # per-stage rows (CSV)
    status: str = "ok"                                           # ok | PASS | FAIL
    timing: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        out = {
            "subcommand": self.subcommand,
            "status": self.status,
            "config": self.config,
            "results": self.results,
            "provenance": self.provenance,
            "stages": self.stages,
        }
        if include_timing:
            out["timing"] = self.timing
        return jsonable(out)

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2, ensure_ascii=False)

    def stage_frame(self) -> pd.DataFrame:
        if self.stages:
            return pd.DataFrame(jsonable(self.stages))
        flat = pd.json_normalize(jsonable(self.results), sep=".")
        return flat

    def to_csv(self) -> str:
        buf = StringIO()
        self.stage_frame().to_csv(buf, index=False)
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"== {self.subcommand} [{self.status}] =="]
        family = self.config.get("bset", {})
        lines.append(f"B: {family.get('family', 'explicit')} {family.get('params', family.get('elements', ''))}")
        for key, value in sorted(jsonable(self.results).items()):
            lines.append(f"{key}: {_short(value)}")
        if self.stages:
            lines.append("")
            with pd.option_context("display.max_colwidth", 40, "display.width", 160):
                lines.append(pd.DataFrame(jsonable(self.stages)).to_string(index=False))
        if self.provenance:
            lines.append("")
            lines.extend(f"* {note}" for note in self.provenance)
        return "\n".join(lines) + "\n"

    def render(self, fmt: Optional[str] = None) -> str:
        fmt = fmt or self.config.get("output_format", "table")
        if fmt == "json":
            return self.to_json() + "\n"
        if fmt == "csv":
            return self.to_csv()
        return self.to_table()


def _short(value: Any, limit: int = 160) -> str:
    text = json.dumps(value, sort_keys=True, ensure_ascii=False) if not isinstance(value, str) else value
    return text if len(text) <= limit else text[:limit - 3] + "..."


def jsonable(obj: Any, key: Optional[str] = None) -> Any:
    """Plain JSON types; big ints and period integers become decimal strings."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name), f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v, str(k)) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [jsonable(v, key) for v in items]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist(), key)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        value = int(obj)
        if abs(value) > JSON_SAFE_INT or key in BIG_INT_KEYS:
            return str(value)
        return value
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _bits_summary(block) -> dict[str, Any]:
    out = {
        "offset": block.offset,
        "length": len(block),
        "step": block.step,
        "free_count": int(block.bits.sum()),
        "exact": block.exact,
        "b_horizon": block.b_horizon,
    }
    if len(block) <= BITS_INLINE_LIMIT:
        out["bits"] = block.bitstring()
    return out


def _run_sieve(cfg: RunConfig, bset: BSet, report: Report) -> None:
    block = sieve_eta(bset, cfg.lo, cfg.hi)
    report.results["eta"] = _bits_summary(block)


def _run_density(cfg: RunConfig, bset: BSet, report: Report) -> None:
    n = cfg.horizon
    if bset.is_finite:
        try:
            report.results["exact_multiples"] = exact_density_of_multiples(
                bset.elements_up_to(bset.max_element() or 1))
        except DensityCapError as exc:
            report.provenance.append(f"exact density unavailable: {exc}")
    report.results["interval_multiples"] = interval_density(bset, "multiples", n)
    report.results["interval_free"] = interval_density(bset, "free", n)
    if n >= 2:
        report.results["log_partial"] = log_density_partial(bset, n)
    cutoffs = [c for c in cfg.cutoffs if c <= n]
    if cutoffs:
        try:
            report.results["davenport_erdos"] = davenport_erdos_trace(bset, cutoffs)
        except DensityCapError as exc:
            report.provenance.append(f"Davenport–Erdős trace stopped: {exc}")
        report.results["light_tails"] = light_tails_trace(bset, cutoffs, n)
    report.provenance.append(f"interval and log densities are counts on [1, {n}]")


def _filtration(cfg: RunConfig, bset: BSet) -> FiltrationTable:
    full = build_filtration(bset, cfg.depth + cfg.lookahead, cfg.mode)
    return compute_dk(full, cfg.lookahead, cfg.confirm).head(cfg.depth)


def stage_rows(table: FiltrationTable) -> list[dict[str, Any]]:
    rows = []
    for st, d in zip(table.stages, table.d_k or [None] * table.depth):
        row = {
            "k": st.k,
            "S_k": list(st.S_k),
            "s_k": st.s_k,
            "A_k_minus_S_k": list(st.new_elems),
            "prim_A_k": list(st.primA_k),
            "c_k": st.c_k,
            "A_k_exact": st.A_k_exact,
        }
        if d is not None:
            row.update({"d_k": d.value, "d_k_status": d.status, "quotient": st.s_k // d.value})
        rows.append(row)
    return rows


def _table_results(table: FiltrationTable, report: Report) -> None:
    report.stages = stage_rows(table)
    report.results["mode"] = table.mode
    report.results["exhausted"] = table.exhausted
    report.results["a_infinity_candidates"] = table.a_infinity_candidates
    if not table.exact:
        report.provenance.append("some A_k computed over B ∩ [1, horizon] (inexact)")
    unsettled = [d.k for d in table.d_k if not d.stabilized]
    if unsettled:
        report.provenance.append(f"d_k unconfirmed at stages {unsettled} (current value shown)")


def _run_filtration(cfg: RunConfig, bset: BSet, report: Report) -> None:
    table = _filtration(cfg, bset)
    _table_results(table, report)
    report.results["period_branching"] = period_branching(table)


def _run_mef(cfg: RunConfig, bset: BSet, report: Report) -> None:
    table = _filtration(cfg, bset)
    _table_results(table, report)
    report.results["mef"] = mef_descriptor(table)


def _verdict(v) -> dict[str, Any]:
    return {"value": v.value, "certified": v.certified, "certificate": v.certificate, "note": v.note}


def _run_classify(cfg: RunConfig, bset: BSet, report: Report) -> None:
    table = _filtration(cfg, bset)
    _table_results(table, report)
    rep = classify(bset, table, cfg.horizon, cfg.chain_threshold, cfg.boundary_threshold, cfg.regularity_ratio)
    for name in ("proximal", "toeplitz", "top_regular", "regular_toeplitz", "taut_evidence"):
        report.results[name] = _verdict(getattr(rep, name))
    report.results["mef"] = rep.mef
    report.results["window"] = rep.measures
    report.results["y_membership"] = {
        b: {"missed": cov.missed, "in_y_evidence": cov.in_y_evidence, "window": cov.window}
        for b, cov in rep.y_membership.items()
    }
    if rep.haar is not None:
        report.results["haar_vanishing"] = len(rep.haar.vanishing)
        report.results["haar_skipped_stages"] = rep.haar.skipped_stages
    report.provenance.extend(rep.notes)
    report.provenance.append(
        f"window measures on [1, {cfg.horizon}]; m_boundary is an upper bound (B truncated at N)")


def _run_window(cfg: RunConfig, bset: BSet, report: Report) -> None:
    table = _filtration(cfg, bset)
    _table_results(table, report)
    report.results["window"] = window_measures(bset, table, cfg.horizon)
    if cfg.stage <= table.depth:
        pos = toeplitz_positions(bset, table, cfg.stage, cfg.periods)
        report.results["toeplitz_positions"] = {
            "k": pos.k, "s_k": pos.s_k, "counts": pos.counts,
            "unresolved_fraction": pos.unresolved_fraction,
            "consistent": pos.consistent, "mismatches": pos.mismatches,
        }
    scan = haar_regularity_scan(bset, table, cfg.horizon, cfg.regularity_ratio)
    report.results["haar"] = scan
    report.results["dense_orbit"] = dense_orbit_evidence(bset, table, cfg.horizon)
    report.provenance.append(f"cylinder counts on [1, {cfg.horizon}]")


def _run_crt(cfg: RunConfig, bset: BSet, report: Report) -> None:
    if not cfg.residues:
        raise ConfigError("crt needs residues (b:r,...)")
    spec = CylinderSpec(cfg.residues)
    result = crt_solve(spec)
    report.results["crt"] = result
    if result.compatible:
        report.results["search"] = bfree_crt_search(bset, spec, cfg.horizon)
        report.provenance.append(f"B-free solutions counted on [1, {cfg.horizon}]")


def _run_phi(cfg: RunConfig, bset: BSet, report: Report) -> None:
    h = HPoint(cfg.residues, cfg.default_rule, cfg.n0)
    try:
        h.validate(bset)
    except UnresolvedCoordinateError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    block = phi_block(bset, h, cfg.lo, cfg.hi)
    report.results["phi"] = _bits_summary(block)
    b_max = max(h.assigned, default=0)
    if b_max:
        report.results["theta"] = theta_of_block(block, bset, b_max)
    if cfg.needle:
        report.results["needle_in_phi"] = block_containment_check(cfg.needle, block, "exact")
        r = cfg.search_radius
        eta = sieve_eta(bset, -r, r)
        report.results["needle_dominated_in_eta"] = block_containment_check(cfg.needle, eta, "lower")
        report.provenance.append(f"dominance searched in η on [-{r}, {r}]")


def _run_reproduce(cfg: RunConfig, bset: Optional[BSet], report: Report) -> None:
    from core.reproduce_catalog import run_experiment

    if not cfg.experiment:
        raise ConfigError("reproduce needs an experiment id")
    outcome = run_experiment(cfg.experiment)
    report.status = "PASS" if outcome.passed else "FAIL"
    report.results.update({
        "experiment": outcome.id,
        "claim": outcome.claim,
        "checks": outcome.checks,
        "observed": outcome.observed,
    })
    report.stages = outcome.stages


_RUNNERS: dict[str, Callable[[RunConfig, Any, Report], None]] = {
    "sieve": _run_sieve,
    "density": _run_density,
    "filtration": _run_filtration,
    "mef": _run_mef,
    "classify": _run_classify,
    "window": _run_window,
    "crt": _run_crt,
    "phi": _run_phi,
    "reproduce": _run_reproduce,
}


def run_subcommand(name: str, config: RunConfig) -> Report:
    """Dispatch one subcommand; the effective config is echoed into the report."""
    runner = _RUNNERS.get(name)
    if runner is None:
        raise ConfigError(f"Unknown subcommand '{name}'. Must be one of: {', '.join(SUBCOMMANDS)}")
    report = Report(subcommand=name, config=config.to_dict(), results={})
    bset = None if name == "reproduce" else config.make_bset()
    started = time.perf_counter()
    runner(config, bset, report)
    report.timing["seconds"] = round(time.perf_counter() - started, 3)
    logger.info("%s finished in %.3fs (status %s)", name, report.timing["seconds"], report.status)
    return report
