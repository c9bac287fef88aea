"""Ensemble orchestration: generation, gain sweeps, binning, reports.

The pipeline persists everything as versioned JSON/CSV so each stage can be
rerun or resumed independently: channel files plus a manifest from
generation; one records CSV per sweep (appended channel by channel, so an
interrupted sweep picks up where it stopped); binned report tables derived
from the records.

Gains are measured with common random numbers: the reference
(fidelity-only) decoder and every informed decoder for a given channel
consume the same sampler stream, so the K = 1 gain is exactly 1 and ratio
noise stays paired.  Gain standard errors use the delta method with the
paired per-sample covariance.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .cer import CerDataset, knr_size, select_knr, select_top_k
from .channels import (
    Channel,
    channel_from_dict,
    channel_to_dict,
    process_infidelity,
)
from .codes import StabilizerCode, get_code
from .decoders import DecoderSpec
from .exceptions import SchemaError, ValidationError
from .ioutil import content_hash, dump_json, load_json
from .logical import SamplerConfig, SimResult, simulate_concatenated
from .noise import NoiseModelConfig, rng_stream, sample_channel
from .uss import tvd, uss_complete

CONFIG_SCHEMA = "cerdec-config-1"
MANIFEST_SCHEMA = "cerdec-manifest-1"
RECORDS_SCHEMA = "cerdec-records-1"
REPORT_SCHEMA = "cerdec-report-1"
TVD_SCHEMA = "cerdec-tvd-1"
RESULT_SCHEMA = "cerdec-result-1"

RECORD_FIELDS = [
    "channel_id", "channel_hash", "eps_physical", "policy", "K", "w",
    "r_ref", "r_ref_stderr", "r_dec", "r_dec_stderr", "gain", "gain_stderr",
    "tvd_partial", "tvd_completed", "alpha", "n_samples", "skipped_fraction",
]

REPORT_FIELDS = [
    "bin_lo", "bin_hi", "count", "mean_eps", "mean_logical", "K",
    "median_gain", "q1", "q3",
]

TVD_FIELDS = ["bin_lo", "bin_hi", "count", "mean_eps", "tvd_partial", "tvd_completed"]


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "runs/out"
    code: str = "steane"
    ensemble: dict = field(default_factory=dict)
    k_list: tuple = (1, 22, 163, 1156, 16384)
    w_list: tuple = (0, 1, 2)
    level: int = 2
    sampler: dict = field(default_factory=dict)
    bins_per_decade: int = 4
    threads: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if data.get("version") != CONFIG_SCHEMA:
            raise SchemaError(
                f"expected {CONFIG_SCHEMA}, got {data.get('version')!r}"
            )
        fields = {k: v for k, v in data.items() if k != "version"}
        cfg = cls(**{
            **fields,
            "k_list": tuple(data.get("k_list", cls.k_list)),
            "w_list": tuple(data.get("w_list", cls.w_list)),
        })
        return cfg

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_SCHEMA,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "code": self.code,
            "ensemble": dict(self.ensemble),
            "k_list": list(self.k_list),
            "w_list": list(self.w_list),
            "level": self.level,
            "sampler": dict(self.sampler),
            "bins_per_decade": self.bins_per_decade,
            "threads": self.threads,
        }

    def config_hash(self) -> str:
        return content_hash(self.to_dict())

    def sampler_config(self, channel_index: int) -> SamplerConfig:
        s = dict(self.sampler)
        alpha = s.get("alpha", 0.4)
        if alpha == "auto":
            alpha = None
        child = int(
            np.random.SeedSequence(
                entropy=self.seed, spawn_key=(channel_index,)
            ).generate_state(1)[0]
        )
        return SamplerConfig(
            mode=s.get("mode", "importance"),
            alpha=alpha,
            samples=int(s.get("samples", 2000)),
            seed=child,
            outlier_threshold=float(s.get("outlier_threshold", 0.3)),
        )


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(load_json(path))


# ---------------------------------------------------------------------------
# Ensemble generation and persistence
# ---------------------------------------------------------------------------


def _ensemble_times(spec: dict) -> list:
    if "time_grid" in spec:
        return [float(t) for t in spec["time_grid"]]
    lo, hi = spec.get("time_range", [0.001, 0.1])
    points = int(spec.get("time_points", 6))
    return np.logspace(math.log10(lo), math.log10(hi), points).tolist()


def generate_ensemble(cfg: RunConfig, out_dir: Optional[str] = None) -> dict:
    """Sample and persist the configured channel ensemble; returns the manifest."""
    spec = dict(cfg.ensemble)
    count = int(spec.get("count", 30))
    times = _ensemble_times(spec)
    out_dir = out_dir or cfg.out_dir
    chan_dir = os.path.join(out_dir, "channels")
    os.makedirs(chan_dir, exist_ok=True)
    entries = []
    for ci in range(count):
        noise_cfg = NoiseModelConfig(
            kind=spec.get("kind", "cg1d"),
            n=int(spec.get("n", 7)),
            num_terms=int(spec.get("num_terms", 4)),
            mean_support=float(spec.get("mean_support", 2.0)),
            time=float(times[ci % len(times)]),
            pauli_infidelity=float(spec.get("pauli_infidelity", 0.01)),
            seed=cfg.seed,
        )
        ch = sample_channel(noise_cfg, rng_stream(cfg.seed, ci))
        payload = channel_to_dict(ch)
        path = os.path.join(chan_dir, f"chan_{ci:03d}.json")
        dump_json(payload, path)
        entries.append({
            "id": f"chan_{ci:03d}",
            "path": os.path.join("channels", f"chan_{ci:03d}.json"),
            "hash": content_hash(payload),
            "time": noise_cfg.time,
        })
    manifest = {
        "version": MANIFEST_SCHEMA,
        "command": "generate",
        "package_version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "count": count,
        "channels": entries,
    }
    dump_json(manifest, os.path.join(out_dir, "ensemble_manifest.json"))
    return manifest


def load_ensemble(out_dir: str) -> list:
    """[(id, hash, Channel)] from a generated ensemble directory."""
    manifest = load_json(os.path.join(out_dir, "ensemble_manifest.json"))
    if manifest.get("version") != MANIFEST_SCHEMA:
        raise SchemaError("not an ensemble manifest")
    out = []
    for entry in manifest["channels"]:
        ch = channel_from_dict(load_json(os.path.join(out_dir, entry["path"])))
        out.append((entry["id"], entry["hash"], ch))
    return out


# ---------------------------------------------------------------------------
# Gain records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainRecord:
    channel_id: str
    channel_hash: str
    eps_physical: float
    policy: str                 # "top_k" or "weight_at_most"
    k: int                      # dataset size (N_w for weight policy)
    w: Optional[int]            # weight bound, empty for top_k
    r_ref: float
    r_ref_stderr: float
    r_dec: float
    r_dec_stderr: float
    gain: float
    gain_stderr: float
    tvd_partial: float
    tvd_completed: float
    alpha: float
    n_samples: int
    skipped_fraction: float


def _paired_gain(ref: SimResult, dec: SimResult) -> tuple:
    """Ratio of means with a delta-method stderr using paired samples."""
    mr, md = ref.values.mean(), dec.values.mean()
    if md <= 0:
        return (math.inf if mr > 0 else 1.0), math.nan
    gain = mr / md
    n = len(ref.values)
    var_r = ref.values.var(ddof=1) / n
    var_d = dec.values.var(ddof=1) / n
    cov = float(np.cov(ref.values, dec.values, ddof=1)[0, 1]) / n
    rel = var_r / mr**2 + var_d / md**2 - 2 * cov / (mr * md) if mr > 0 else 0.0
    return gain, gain * math.sqrt(max(rel, 0.0))


def _sweep_channel(args) -> list:
    """Worker: all records for one channel (gain or weight sweep)."""
    cfg, cid, chash, ch, code, mode = args
    from .cer import exact_rates

    oracle = exact_rates(ch)
    eps = float(1.0 - oracle.probs[0])
    ci = int(cid.split("_")[-1])
    sampler = cfg.sampler_config(ci)
    ref = simulate_concatenated(ch, code, cfg.level, DecoderSpec("d1"), sampler)
    rows = []
    items = (
        [("top_k", k, None) for k in cfg.k_list]
        if mode == "gain"
        else [("weight_at_most", knr_size(code.n, w), w) for w in cfg.w_list]
    )
    for policy, k, w in items:
        ds = (
            select_top_k(oracle, k)
            if policy == "top_k"
            else select_knr(oracle, w)
        )
        completed = uss_complete(ds)
        dec = simulate_concatenated(
            ch, code, cfg.level, DecoderSpec("ml_uss", ds), sampler
        )
        gain, gain_se = _paired_gain(ref, dec)
        rows.append(GainRecord(
            channel_id=cid,
            channel_hash=chash,
            eps_physical=eps,
            policy=policy,
            k=k,
            w=w,
            r_ref=ref.r_hat,
            r_ref_stderr=ref.stderr,
            r_dec=dec.r_hat,
            r_dec_stderr=dec.stderr,
            gain=gain,
            gain_stderr=gain_se,
            tvd_partial=tvd(oracle, ds.padded_vector()),
            tvd_completed=tvd(oracle, completed.dist),
            alpha=dec.alpha,
            n_samples=dec.n_samples,
            skipped_fraction=dec.skipped_fraction,
        ))
    return rows


def run_sweep(cfg: RunConfig, mode: str = "gain",
              out_dir: Optional[str] = None) -> list:
    """Gain (top-k) or weight-bound sweep over the persisted ensemble.

    Records append to ``records.csv`` / ``knr_records.csv`` channel by
    channel; channels already present are skipped, so rerunning a finished
    sweep rewrites nothing.
    """
    out_dir = out_dir or cfg.out_dir
    code = get_code(cfg.code)
    ensemble = load_ensemble(out_dir)
    name = "records.csv" if mode == "gain" else "knr_records.csv"
    path = os.path.join(out_dir, name)
    existing = read_records(path) if os.path.exists(path) else []
    done = {r.channel_id for r in existing}
    todo = [(cid, chash, ch) for cid, chash, ch in ensemble if cid not in done]

    new_rows = []
    jobs = [(cfg, cid, chash, ch, code, mode) for cid, chash, ch in todo]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for rows in pool.map(_sweep_channel, jobs):
                new_rows.append(rows)
    else:
        for job in jobs:
            new_rows.append(_sweep_channel(job))

    if new_rows:
        flat = [r for rows in new_rows for r in rows]
        append_records(path, flat, write_header=not os.path.exists(path))
        manifest = {
            "version": MANIFEST_SCHEMA,
            "command": f"sweep:{mode}",
            "package_version": __version__,
            "seed": cfg.seed,
            "config_hash": cfg.config_hash(),
        }
        dump_json(manifest, os.path.join(out_dir, f"{mode}_sweep_manifest.json"))
        existing = existing + flat
    return existing


# ---------------------------------------------------------------------------
# Records CSV
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def append_records(path, records, write_header: bool) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "a", newline="") as fh:
        if write_header:
            fh.write(f"# schema: {RECORDS_SCHEMA}\n")
            fh.write(",".join(RECORD_FIELDS) + "\n")
        writer = csv.writer(fh)
        for r in records:
            writer.writerow([
                r.channel_id, r.channel_hash, _fmt(r.eps_physical), r.policy,
                r.k, _fmt(r.w), _fmt(r.r_ref), _fmt(r.r_ref_stderr),
                _fmt(r.r_dec), _fmt(r.r_dec_stderr), _fmt(r.gain),
                _fmt(r.gain_stderr), _fmt(r.tvd_partial), _fmt(r.tvd_completed),
                _fmt(r.alpha), r.n_samples, _fmt(r.skipped_fraction),
            ])


def read_records(path) -> list:
    out = []
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema: {RECORDS_SCHEMA}":
            raise SchemaError(f"unexpected records schema line {first!r}")
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(GainRecord(
                channel_id=row["channel_id"],
                channel_hash=row["channel_hash"],
                eps_physical=float(row["eps_physical"]),
                policy=row["policy"],
                k=int(row["K"]),
                w=int(row["w"]) if row["w"] else None,
                r_ref=float(row["r_ref"]),
                r_ref_stderr=float(row["r_ref_stderr"]),
                r_dec=float(row["r_dec"]),
                r_dec_stderr=float(row["r_dec_stderr"]),
                gain=float(row["gain"]),
                gain_stderr=float(row["gain_stderr"]),
                tvd_partial=float(row["tvd_partial"]),
                tvd_completed=float(row["tvd_completed"]),
                alpha=float(row["alpha"]),
                n_samples=int(row["n_samples"]),
                skipped_fraction=float(row["skipped_fraction"]),
            ))
    return out


# ---------------------------------------------------------------------------
# Binning and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    k: int
    channel_ids: tuple
    median_gain: float
    q1: float
    q3: float
    mean_eps: float
    mean_logical: float
    mean_tvd_partial: float
    mean_tvd_completed: float

    @property
    def count(self) -> int:
        return len(self.channel_ids)


def default_bin_edges(eps_values, per_decade: int = 4) -> np.ndarray:
    """Logarithmic edges covering the data range."""
    eps_values = np.asarray([e for e in eps_values if e > 0])
    if eps_values.size == 0:
        raise ValidationError("no positive infidelities to bin")
    lo = math.floor(math.log10(eps_values.min()) * per_decade) / per_decade
    hi = math.ceil(math.log10(eps_values.max()) * per_decade) / per_decade
    # intervals are half-open [lo, hi); keep the maximum strictly inside
    while 10.0**hi <= eps_values.max():
        hi += 1.0 / per_decade
    if hi <= lo:
        hi = lo + 1.0 / per_decade
    steps = int(round((hi - lo) * per_decade)) + 1
    return np.logspace(lo, hi, steps)


def bin_and_aggregate(records, edges=None, per_decade: int = 4) -> list:
    """Group records by physical infidelity; one Bin per (interval, K).

    Quantiles use linear interpolation; empty intervals are dropped.
    """
    records = list(records)
    if not records:
        raise ValidationError("no records to aggregate")
    if edges is None:
        edges = default_bin_edges([r.eps_physical for r in records], per_decade)
    edges = np.asarray(edges, dtype=float)
    if (np.diff(edges) <= 0).any():
        raise ValidationError("bin edges must increase strictly")
    bins = []
    ks = sorted({r.k for r in records})
    for i in range(len(edges) - 1):
        lo, hi = float(edges[i]), float(edges[i + 1])
        members = [r for r in records if lo <= r.eps_physical < hi]
        if not members:
            continue
        for k in ks:
            rows = [r for r in members if r.k == k]
            if not rows:
                continue
            gains = np.array([r.gain for r in rows])
            finite = gains[np.isfinite(gains)]
            # unbounded ratios (decoder estimate hit zero) sort above any
            # finite gain for quantile purposes
            med, q1, q3 = (
                np.percentile(gains, [50, 25, 75])
                if finite.size == gains.size
                else _quantiles_with_inf(gains)
            )
            bins.append(Bin(
                lo=lo,
                hi=hi,
                k=k,
                channel_ids=tuple(r.channel_id for r in rows),
                median_gain=float(med),
                q1=float(q1),
                q3=float(q3),
                mean_eps=float(np.mean([r.eps_physical for r in rows])),
                mean_logical=float(np.mean([r.r_ref for r in rows])),
                mean_tvd_partial=float(np.mean([r.tvd_partial for r in rows])),
                mean_tvd_completed=float(np.mean([r.tvd_completed for r in rows])),
            ))
    return bins


def _quantiles_with_inf(gains: np.ndarray) -> tuple:
    order = np.sort(gains)  # inf sorts last
    def q(p):
        pos = p * (len(order) - 1)
        lo = int(math.floor(pos))
        hi = int(math.ceil(pos))
        if not np.isfinite(order[lo]) or not np.isfinite(order[hi]):
            return order[lo] if np.isfinite(order[lo]) else math.inf
        return order[lo] + (order[hi] - order[lo]) * (pos - lo)
    return q(0.5), q(0.25), q(0.75)


def write_report(path, bins) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {REPORT_SCHEMA}\n")
        fh.write(",".join(REPORT_FIELDS) + "\n")
        writer = csv.writer(fh)
        for b in bins:
            writer.writerow([
                _fmt(b.lo), _fmt(b.hi), b.count, _fmt(b.mean_eps),
                _fmt(b.mean_logical), b.k, _fmt(b.median_gain),
                _fmt(b.q1), _fmt(b.q3),
            ])


def tvd_report(records, k: int, edges=None, per_decade: int = 4) -> list:
    """Per-bin mean TVDs at a fixed dataset size."""
    rows = [r for r in records if r.k == k]
    if not rows:
        raise ValidationError(f"no records at K={k}")
    return bin_and_aggregate(rows, edges, per_decade)


def write_tvd_report(path, bins) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {TVD_SCHEMA}\n")
        fh.write(",".join(TVD_FIELDS) + "\n")
        writer = csv.writer(fh)
        for b in bins:
            writer.writerow([
                _fmt(b.lo), _fmt(b.hi), b.count, _fmt(b.mean_eps),
                _fmt(b.mean_tvd_partial), _fmt(b.mean_tvd_completed),
            ])
        fh.write("# note: tvd_partial zero-pads the missing rates; no ordering\n")
        fh.write("# between the two columns is asserted - either can dominate\n")
        fh.write("# depending on the ensemble.\n")


def read_table(path, schema: str) -> list:
    """Rows of a schema-tagged CSV as dicts of floats/strings."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema: {schema}":
            raise SchemaError(f"expected schema {schema}, found {first!r}")
        rows = []
        reader = csv.DictReader(
            line for line in fh if not line.startswith("#")
        )
        for row in reader:
            rows.append(row)
    return rows
