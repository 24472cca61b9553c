"""Labeled synthetic troubleshooting cases.

Background KPIs are independent unit-variance noise in raw units (random
offset and scale per KPI).  Anomalous KPIs receive a pattern inside the
anomaly window and are flagged by the ground truth over that window.
Symptom KPIs copy a cause's pattern plus extra noise but are left unflagged,
the way an expert ignores effects of the root issue.

Suite dimensions are drawn from piecewise log-linear quantile functions
through the five-number summaries of a real 28-case router corpus.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import CaseBundle, load_case, write_case
from .model import Dataset, GroundTruth

PATTERNS = ("level-shift", "spike", "ramp")

# five-number summaries (min, q1, median, q3, max) of the reference corpus
T_KNOTS = (211, 1025, 1981, 4394, 10770)
F_KNOTS = (6, 27, 73, 126, 373)
SLOT_FRAC_KNOTS = (0.0001, 0.002, 0.012, 0.082, 0.64)
KPI_FRAC_KNOTS = (0.003, 0.03, 0.06, 0.167, 0.375)

_SUBSYSTEMS = (
    "bgp", "isis", "ospf", "mpls", "ldp", "rsvp", "fib", "rib", "qos", "cpu", "mem",
    "acl", "arp", "nd", "pim", "bfd", "lldp", "vrrp", "lacp", "ntp", "snmp", "sys",
    "lc0", "lc1", "lc2", "fab0", "fab1", "psu", "fan", "if.ge0-0-0", "if.ge0-0-1",
    "if.xe1-0-0", "if.xe1-0-1", "if.ae0", "if.ae1", "tunnel", "vpn", "l2vpn", "evpn",
)
_METRICS = (
    "rx_drops", "tx_drops", "in_errors", "out_errors", "crc", "util", "pps", "bps",
    "queue_depth", "sessions", "updates", "withdrawals", "flaps", "ttl_expired",
    "latency", "retransmits", "adjacencies", "routes", "labels", "discards",
)


def kpi_name_pool() -> list[str]:
    """Router-like KPI names, e.g. ``bgp.updates`` or ``if.xe1-0-0.crc``."""
    return [f"{s}.{m}" for s in _SUBSYSTEMS for m in _METRICS]


@dataclass(frozen=True)
class SynthSpec:
    f: int
    t_slots: int
    n_anomalous_features: int
    n_symptom_features: int
    anomaly_window: tuple[int, int]  # (start, length)
    shift_magnitude: float
    pattern: str = "level-shift"
    noise_seed: int = 0
    kpi_name_pool: tuple[str, ...] = ()
    case_id: str = "case"
    anomalous_names: tuple[str, ...] = ()
    symptom_names: tuple[str, ...] = ()
    symptom_gain: float = 1.0
    symptom_noise: float = 0.5
    correlation: float = 0.0

    def validate(self) -> None:
        start, length = self.anomaly_window
        if self.f < 1 or self.t_slots < 2:
            raise ValueError("need f >= 1 and t_slots >= 2")
        if self.n_anomalous_features < 1:
            raise ValueError("at least one anomalous feature is required (metrics need a nonempty ground truth)")
        if self.n_symptom_features < 0:
            raise ValueError("n_symptom_features must be >= 0")
        if self.n_anomalous_features + self.n_symptom_features > self.f:
            raise ValueError("anomalous + symptom features exceed f")
        if start < 0 or length < 1 or start + length > self.t_slots:
            raise ValueError(f"window {self.anomaly_window} outside [0, {self.t_slots})")
        if length >= self.t_slots:
            raise ValueError("window must leave at least one normal timeslot")
        if not self.shift_magnitude > 0:
            raise ValueError("shift_magnitude must be > 0")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if len(self.anomalous_names) > self.n_anomalous_features:
            raise ValueError("more anomalous_names than anomalous features")
        if len(self.symptom_names) > self.n_symptom_features:
            raise ValueError("more symptom_names than symptom features")
        if not 0 <= self.correlation < 1:
            raise ValueError("correlation must be in [0, 1)")


def pattern_profile(pattern: str, length: int) -> np.ndarray:
    """Unit-peak shape applied over the anomaly window."""
    k = np.arange(length, dtype=float)
    if pattern == "level-shift":
        return np.ones(length)
    if pattern == "ramp":
        return (k + 1.0) / length
    if pattern == "spike":
        return np.exp(-3.0 * k / length)
    raise ValueError(f"unknown pattern {pattern!r}")


def _pick_names(spec: SynthSpec, rng: np.random.Generator) -> list[str]:
    fixed = list(spec.anomalous_names) + list(spec.symptom_names)
    pool = [n for n in dict.fromkeys(spec.kpi_name_pool) if n not in fixed]
    need = spec.f - len(fixed)
    if len(pool) < need:
        taken = set(pool) | set(fixed)
        extra = (f"kpi.{i:04d}" for i in range(10 * spec.f + 10))
        pool += [n for n in extra if n not in taken][: need - len(pool)]
    chosen = [pool[i] for i in rng.choice(len(pool), size=need, replace=False)]
    return fixed + chosen


def generate_case(spec: SynthSpec) -> CaseBundle:
    """Build one labeled case; identical specs give bit-identical cases."""
    spec.validate()
    rng = np.random.default_rng(spec.noise_seed)
    f, n_slots = spec.f, spec.t_slots
    n_anom, n_sym = spec.n_anomalous_features, spec.n_symptom_features

    # role of each row: first the named ones, the rest drawn at random
    names = _pick_names(spec, rng)
    n_named_anom = len(spec.anomalous_names)
    n_named_sym = len(spec.symptom_names)
    free = list(range(n_named_anom + n_named_sym, f))
    rng.shuffle(free)
    anom_rows = list(range(n_named_anom)) + free[: n_anom - n_named_anom]
    free = free[n_anom - n_named_anom:]
    sym_rows = list(range(n_named_anom, n_named_anom + n_named_sym)) + free[: n_sym - n_named_sym]

    noise = rng.standard_normal((f, n_slots))
    if spec.correlation > 0:
        common = rng.standard_normal(n_slots)
        noise = math.sqrt(1 - spec.correlation) * noise + math.sqrt(spec.correlation) * common
    start, length = spec.anomaly_window
    window = slice(start, start + length)
    profile = pattern_profile(spec.pattern, length)

    signal = noise
    cause_patterns = []
    for row in anom_rows:
        sign = rng.choice((-1.0, 1.0))
        pat = sign * spec.shift_magnitude * profile
        signal[row, window] += pat
        cause_patterns.append(pat)
    for i, row in enumerate(sym_rows):
        signal[row] += spec.symptom_noise * rng.standard_normal(n_slots)
        signal[row, window] += spec.symptom_gain * cause_patterns[i % len(cause_patterns)]

    offset = rng.uniform(0.0, 1000.0, size=(f, 1))
    scale = np.exp(rng.uniform(-1.0, 3.0, size=(f, 1)))
    values = np.round(offset + scale * signal, 4)

    order = np.argsort(np.array(names, dtype=object), kind="stable")
    names = [names[i] for i in order]
    values = values[order]
    g = np.zeros((f, n_slots), dtype=np.int8)
    inverse = np.empty(f, dtype=int)
    inverse[order] = np.arange(f)
    for row in anom_rows:
        g[inverse[row], window] = 1

    dataset = Dataset(names, range(n_slots), values)
    return CaseBundle(dataset, GroundTruth(g, dataset_id=spec.case_id), spec.case_id)


def case_seed(master_seed: int, index: int) -> int:
    """Counter-derived 63-bit seed for item ``index`` under ``master_seed``."""
    state = np.random.SeedSequence([int(master_seed) & (2**63 - 1), int(index)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _quantile(knots: Sequence[float], u: float) -> float:
    """Piecewise log-linear quantile function through five-number-summary knots."""
    logk = np.log(np.asarray(knots, dtype=float))
    return float(np.exp(np.interp(u, np.linspace(0.0, 1.0, len(knots)), logk)))


@dataclass(frozen=True)
class SuiteRanges:
    t_knots: tuple[float, ...] = T_KNOTS
    f_knots: tuple[float, ...] = F_KNOTS
    slot_frac_knots: tuple[float, ...] = SLOT_FRAC_KNOTS
    kpi_frac_knots: tuple[float, ...] = KPI_FRAC_KNOTS
    strong_shift: float = 10.0
    strong_every: int = 3  # every n-th case gets the strong shift
    weak_shift: tuple[float, float] = (3.0, 8.0)
    max_symptoms: int = 2

    def __post_init__(self):
        for knots in (self.t_knots, self.f_knots, self.slot_frac_knots, self.kpi_frac_knots):
            if len(knots) < 2 or any(b < a for a, b in zip(knots, knots[1:])) or knots[0] <= 0:
                raise ValueError(f"knots must be positive and non-decreasing, got {knots}")

    @classmethod
    def small(cls) -> "SuiteRanges":
        """Desk-sized cases for quick runs and tests."""
        return cls(t_knots=(211, 260, 320, 420, 600), f_knots=(6, 10, 16, 24, 40))


def _bounded_count(frac: float, total: int, lo_frac: float, hi_frac: float) -> int:
    lo = max(1, math.ceil(lo_frac * total))
    hi = max(lo, math.floor(hi_frac * total))
    return int(min(hi, max(lo, round(frac * total))))


def suite_specs(n_cases: int = 28, ranges: SuiteRanges = SuiteRanges(), master_seed: int = 0,
                mode: str = "default") -> list[SynthSpec]:
    """Draw per-case specs; every random choice comes from a counter-derived seed."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    if mode not in ("default", "ek"):
        raise ValueError("mode must be 'default' or 'ek'")
    pool = kpi_name_pool()
    specs = []
    for i in range(n_cases):
        seed = case_seed(master_seed, i)
        rng = np.random.default_rng(seed)
        u = rng.random(4)
        n_slots = int(round(_quantile(ranges.t_knots, u[0])))
        f = int(round(_quantile(ranges.f_knots, u[1])))
        slot_lo, slot_hi = ranges.slot_frac_knots[0], ranges.slot_frac_knots[-1]
        kpi_lo, kpi_hi = ranges.kpi_frac_knots[0], ranges.kpi_frac_knots[-1]
        if mode == "ek":
            slot_hi = min(slot_hi, 0.05)
        length = _bounded_count(_quantile(ranges.slot_frac_knots, u[2]), n_slots, slot_lo, slot_hi)
        length = min(length, n_slots - 1)
        n_anom = _bounded_count(_quantile(ranges.kpi_frac_knots, u[3]), f, kpi_lo, kpi_hi)
        start = int(rng.integers(0, n_slots - length + 1))
        pattern = PATTERNS[int(rng.integers(len(PATTERNS)))]
        case_id = f"case{i:02d}"

        if mode == "ek":
            # one shared root cause per scenario, its amplified symptom, half the
            # remaining KPIs from the shared pool
            scenario = "ABCD"[i % 4]
            shift = float(rng.uniform(*ranges.weak_shift))
            n_sym = int(min(f - 1, 1 + rng.integers(0, ranges.max_symptoms + 1)))
            n_shared = (f - 2) // 2
            shared = [pool[k] for k in rng.choice(len(pool), size=n_shared, replace=False)]
            own = [f"r{i:02d}/{n}" for n in pool]
            own = [own[k] for k in rng.choice(len(own), size=f - 2 - n_shared, replace=False)]
            spec = SynthSpec(
                f=f, t_slots=n_slots, n_anomalous_features=1, n_symptom_features=n_sym,
                anomaly_window=(start, length), shift_magnitude=shift, pattern=pattern,
                noise_seed=seed, kpi_name_pool=tuple(shared + own), case_id=case_id,
                anomalous_names=(f"cause_{scenario}",), symptom_names=(f"symptom_{scenario}",),
                symptom_gain=1.5,
            )
        else:
            strong = ranges.strong_every > 0 and i % ranges.strong_every == 0
            shift = ranges.strong_shift if strong else float(rng.uniform(*ranges.weak_shift))
            n_sym = 0 if strong else int(min(f - n_anom, rng.integers(0, ranges.max_symptoms + 1)))
            n_shared = int(math.floor(0.05 * f))
            shared = [pool[k] for k in rng.choice(len(pool), size=n_shared, replace=False)]
            own = [f"r{i:02d}/{n}" for n in pool]
            own = [own[k] for k in rng.choice(len(own), size=f - n_shared, replace=False)]
            spec = SynthSpec(
                f=f, t_slots=n_slots, n_anomalous_features=n_anom, n_symptom_features=n_sym,
                anomaly_window=(start, length), shift_magnitude=shift, pattern=pattern,
                noise_seed=seed, kpi_name_pool=tuple(shared + own), case_id=case_id,
            )
        spec.validate()
        specs.append(spec)
    return specs


def generate_suite(n_cases: int = 28, ranges: SuiteRanges = SuiteRanges(), master_seed: int = 0,
                   out_dir=None, mode: str = "default") -> list[CaseBundle]:
    """Generate a suite and, if ``out_dir`` is given, write it with a manifest."""
    specs = suite_specs(n_cases, ranges, master_seed, mode)
    cases = [generate_case(s) for s in specs]
    if out_dir is not None:
        write_suite(cases, specs, out_dir, master_seed=master_seed, mode=mode)
    return cases


def _spec_record(spec: SynthSpec) -> dict:
    rec = asdict(spec)
    rec["anomaly_window"] = list(spec.anomaly_window)
    rec["anomalous_names"] = list(spec.anomalous_names)
    rec["symptom_names"] = list(spec.symptom_names)
    del rec["kpi_name_pool"]  # the written header already lists the chosen names
    return rec


def write_suite(cases: Sequence[CaseBundle], specs: Sequence[SynthSpec] | None, out_dir,
                master_seed: int | None = None, mode: str = "default") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, case in enumerate(cases):
        case_dir = out / case.case_id
        case_dir.mkdir(exist_ok=True)
        write_case(case, case_dir / "data.csv", case_dir / "gt.csv")
        entry = {"case_id": case.case_id, "data": f"{case.case_id}/data.csv", "gt": f"{case.case_id}/gt.csv"}
        if specs is not None:
            entry["spec"] = _spec_record(specs[k])
        entries.append(entry)
    manifest = {"cases": entries, "master_seed": master_seed, "mode": mode}
    path = out / "suite_manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def load_suite(suite_dir) -> list[CaseBundle]:
    """Read every case listed in ``suite_manifest.json`` (or every ``*/data.csv``)."""
    root = Path(suite_dir)
    manifest = root / "suite_manifest.json"
    if manifest.exists():
        entries = json.loads(manifest.read_text(encoding="utf-8"))["cases"]
        return [load_case(root / e["data"], root / e["gt"], case_id=e["case_id"]) for e in entries]
    return [load_case(p, p.parent / "gt.csv", case_id=p.parent.name)
            for p in sorted(root.glob("*/data.csv"))]
