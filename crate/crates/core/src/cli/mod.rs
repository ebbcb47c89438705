//! Experiment configurations and the command dispatcher behind the binary.
//!
//! Every run is described by one `ExperimentConfig` that round-trips
//! losslessly through JSON; every artifact carries the serialized config
//! and the seed in `#` metadata lines, so a run can be reproduced from any
//! of its outputs.

pub mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::birkhoff::{
    backward_envelope_check, block_average_backward, block_average_forward, cesaro_sequence,
    doubling_blocks, hopf_decay_check,
};
use crate::dos::{
    alternating_doubling, build_spatial_counterexample, dos_limit_scan, dos_spatial,
    dos_truncation, moment_gap, spectrum_probe, SpatialRegion, TruncationVariant,
};
use crate::dynamics::thm2::{construct_thm2_potential, MonteCarloConfig, ScanGrid};
use crate::dynamics::{build_blocks, minima_subsequence, RotationSystem};
use crate::error::{Error, Result};
use crate::lyapunov::avalanche::{
    calibrate_avalanche, gap_demo_forward_vs_backward, gap_demo_upper_vs_lower,
};
use crate::lyapunov::{exponent_scan, ExponentEstimates};
use crate::numerics::{HeightValue, Real};
use crate::operator::{eigenvalues, potential_window, truncate, PotentialSource, Side};

use output::*;

/// How the rotation number is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    /// The golden mean (all partial quotients 1).
    Golden,
    /// An exact rational like "29/70" or "0.4142".
    Rational(String),
}

impl AlphaSpec {
    fn to_system(&self, u0: &str) -> Result<RotationSystem> {
        let u0 = Real::parse_rational(u0)
            .ok_or_else(|| Error::Config(format!("cannot parse u0 = {u0:?}")))?;
        match self {
            AlphaSpec::Golden => RotationSystem::golden(u0),
            AlphaSpec::Rational(s) => {
                let alpha = Real::parse_rational(s)
                    .ok_or_else(|| Error::Config(format!("cannot parse alpha = {s:?}")))?;
                // a rational alpha is periodic; the partial quotients of
                // its finite expansion stand in as the witness
                RotationSystem::new(alpha, vec![1], u0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub alpha: AlphaSpec,
    pub u0: String,
    /// Block range `[-K, K]`.
    pub k_range: i64,
    pub bit_cap: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaSpec::Golden,
            u0: "0.3".into(),
            k_range: 40,
            bit_cap: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirkhoffVariant {
    Witness,
    Backward,
    Cesaro,
    Hopf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosVariant {
    Spatial,
    Truncation,
    Gap,
    Counterexample,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovVariant {
    Scan,
    GapUpperVsLower,
    GapForwardVsBackward,
    Avalanche,
    Ac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CommandConfig {
    Blocks,
    Birkhoff {
        variant: BirkhoffVariant,
        /// Probes per block for interior checks, depth for the Cesaro run.
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Construct {
        k_max: usize,
    },
    Dos {
        variant: DosVariant,
        #[serde(default = "default_degree")]
        degree: usize,
        #[serde(default = "default_window")]
        n: usize,
        #[serde(default)]
        side: SideSpec,
        #[serde(default = "default_level_cap")]
        max_level: u64,
    },
    Lyapunov {
        variant: LyapunovVariant,
        #[serde(default = "default_energy")]
        e: f64,
        #[serde(default = "default_grid")]
        e_grid: (f64, f64, f64),
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    Probe {
        #[serde(default = "default_window")]
        n: usize,
    },
}

fn default_depth() -> usize {
    20
}
fn default_degree() -> usize {
    2
}
fn default_window() -> usize {
    64
}
fn default_level_cap() -> u64 {
    256
}
fn default_energy() -> f64 {
    20.0
}
fn default_grid() -> (f64, f64, f64) {
    (-3.0, 3.0, 0.01)
}
fn default_threshold() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SideSpec {
    #[default]
    Plus,
    Minus,
}

impl From<SideSpec> for Side {
    fn from(s: SideSpec) -> Side {
        match s {
            SideSpec::Plus => Side::Plus,
            SideSpec::Minus => Side::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eigen_tol: f64,
    /// Fattening for the spectrum probe.
    pub fattening: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigen_tol: 1e-10,
            fattening: 0.05,
        }
    }
}

/// One experiment: command, system, schedule, Monte Carlo settings,
/// output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: CommandConfig,
    #[serde(default)]
    pub system: SystemConfig,
    /// Cocycle and scan schedule exponent: windows `3^1 .. 3^s_max`.
    #[serde(default = "default_s_max")]
    pub s_max: u32,
    pub mc: MonteCarloConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_out")]
    pub out_dir: String,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_s_max() -> u32 {
    10
}
fn default_c1() -> f64 {
    10.0
}
fn default_out() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.system.k_range < 1 {
            return Err(Error::Config("k_range must be >= 1".into()));
        }
        if self.system.bit_cap < 64 {
            return Err(Error::Config("bit_cap must be >= 64".into()));
        }
        if self.s_max < 1 || self.s_max > 39 {
            return Err(Error::Config("s_max must be in [1, 39]".into()));
        }
        if self.mc.samples == 0 {
            return Err(Error::Config("mc.samples must be >= 1".into()));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::Config("c1 must be positive".into()));
        }
        if !(self.tolerances.eigen_tol > 0.0) {
            return Err(Error::Config("eigen_tol must be positive".into()));
        }
        // the config must survive a JSON round trip unchanged
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Config(format!("config not serializable: {e}")))?;
        let back: ExperimentConfig = serde_json::from_str(&json)
            .map_err(|e| Error::Config(format!("config does not round-trip: {e}")))?;
        if back != *self {
            return Err(Error::Config("config does not round-trip losslessly".into()));
        }
        Ok(())
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("ergodeq {}", env!("CARGO_PKG_VERSION"))),
            (
                "config".into(),
                serde_json::to_string(self).expect("serializable"),
            ),
            ("seed".into(), self.mc.seed.to_string()),
        ]
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

fn height_fields(h: &HeightValue) -> (String, String) {
    match h {
        HeightValue::Exact(i) => {
            if i.significant_bits() <= 64 {
                (i.to_string(), "exact".into())
            } else {
                let l2 = crate::numerics::FloatInterval::from_integer(96, i)
                    .log2(96)
                    .mid_f64();
                (fmt_f64(l2), "exact_log2".into())
            }
        }
        HeightValue::Bracketed(lm) => {
            let mid = 0.5 * (lm.log2_lo().to_f64() + lm.log2_hi().to_f64());
            (fmt_f64(mid), "log2".into())
        }
    }
}

/// Run one configured experiment, writing artifacts into `out_dir`.
/// Returns the written paths.
pub fn run(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    if let Some(t) = config.threads {
        // a global pool can only be installed once per process; later calls
        // keep the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let dir = Path::new(&config.out_dir);
    std::fs::create_dir_all(dir)?;
    let meta = config.metadata();
    let sys = config.system.alpha.to_system(&config.system.u0)?;

    match &config.command {
        CommandConfig::Blocks => run_blocks(config, &sys, dir, &meta),
        CommandConfig::Birkhoff { variant, depth } => {
            run_birkhoff(config, &sys, dir, &meta, *variant, *depth)
        }
        CommandConfig::Construct { k_max } => run_construct(config, &sys, dir, &meta, *k_max),
        CommandConfig::Dos {
            variant,
            degree,
            n,
            side,
            max_level,
        } => run_dos(config, &sys, dir, &meta, *variant, *degree, *n, (*side).into(), *max_level),
        CommandConfig::Lyapunov {
            variant,
            e,
            e_grid,
            threshold,
        } => run_lyapunov(config, &sys, dir, &meta, *variant, *e, *e_grid, *threshold),
        CommandConfig::Probe { n } => run_probe(config, &sys, dir, &meta, *n),
    }
}

fn run_blocks(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
) -> Result<Vec<PathBuf>> {
    let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
    let mut csv = CsvFile::create(dir, "blocks.csv", meta, SCHEMA_BLOCKS);
    for k in -config.system.k_range..=config.system.k_range {
        let (p, p_mode) = height_fields(blocks.p(k)?);
        let (q, q_mode) = height_fields(blocks.q(k)?);
        let t = blocks.t(k)?;
        let (t_val, t_mode) = height_fields(&t.magnitude);
        let t_signed = if t.negative {
            format!("-{t_val}")
        } else {
            t_val
        };
        csv.row(&[
            k.to_string(),
            fmt_f64(blocks.beta(k)?.to_f64()),
            p,
            q,
            t_signed,
            p_mode,
            q_mode,
            t_mode,
        ]);
    }
    Ok(vec![csv.finish()?])
}

fn run_birkhoff(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
    variant: BirkhoffVariant,
    depth: usize,
) -> Result<Vec<PathBuf>> {
    match variant {
        BirkhoffVariant::Witness => {
            let scan_max = (config.system.k_range).max(8);
            let minima = minima_subsequence(sys, scan_max)?;
            let blocks = build_blocks(sys, scan_max, config.system.bit_cap)?;
            let mut csv = CsvFile::create(dir, "witness_forward.csv", meta, SCHEMA_WITNESS);
            for &n in &minima.s {
                let w = block_average_forward(&blocks, n)?;
                let (idx, _) = height_fields(&w.index);
                let tn_log2_hi = w
                    .tn_over_qn
                    .log2
                    .as_ref()
                    .map(|l| l.hi_f64())
                    .unwrap_or(f64::NEG_INFINITY);
                csv.row(&[
                    n.to_string(),
                    idx,
                    fmt_f64(w.average.lo_f64()),
                    fmt_f64(w.average.hi_f64()),
                    fmt_f64(tn_log2_hi),
                    fmt_f64(w.lower_bound.lo_f64()),
                ]);
            }
            Ok(vec![csv.finish()?])
        }
        BirkhoffVariant::Backward => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let mut csv = CsvFile::create(dir, "backward.csv", meta, SCHEMA_BACKWARD);
            for k in 1..=config.system.k_range {
                let b = block_average_backward(&blocks, k)?;
                let (idx, _) = height_fields(&b.index);
                csv.row(&[
                    k.to_string(),
                    idx,
                    fmt_f64(b.average.lo_f64()),
                    fmt_f64(b.average.hi_f64()),
                    fmt_f64(b.cs_bound.hi_f64()),
                    b.certificate_ok.to_string(),
                ]);
            }
            // interior envelope report for the first fully exact block pair
            let mut envelope = serde_json::json!(null);
            for k in 2..=config.system.k_range {
                match backward_envelope_check(&blocks, k, 12) {
                    Ok(rep) => {
                        envelope = serde_json::json!({
                            "k": rep.k,
                            "envelope_ok": rep.envelope_ok,
                            "pattern_ok": rep.pattern_ok,
                            "probes": rep.probes.len(),
                        });
                        break;
                    }
                    Err(Error::InexactHeights(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            let json = write_json(
                dir,
                "backward_envelope.json",
                &config.config_json(),
                envelope,
            )?;
            Ok(vec![csv.finish()?, json])
        }
        BirkhoffVariant::Cesaro => {
            let (lengths, values) = doubling_blocks(depth);
            let series = cesaro_sequence(&lengths, &values)?;
            let mut csv = CsvFile::create(dir, "cesaro.csv", meta, SCHEMA_CESARO);
            for (b, s) in series.boundaries.iter().zip(series.s.iter()) {
                csv.row(&[b.to_string(), fmt_f64(s.to_f64())]);
            }
            Ok(vec![csv.finish()?])
        }
        BirkhoffVariant::Hopf => {
            let schedule: Vec<u64> = (1..=config.s_max).map(|s| 3u64.pow(s)).collect();
            let epsilons = [0.5, 0.25, 0.125];
            let rows = hopf_decay_check(1, sys, &schedule, &epsilons, &config.mc)?;
            let mut csv = CsvFile::create(dir, "hopf.csv", meta, SCHEMA_HOPF);
            for r in &rows {
                for (eps, frac) in &r.exceed {
                    csv.row(&[
                        r.n.to_string(),
                        fmt_f64(r.mean),
                        fmt_f64(*eps),
                        fmt_f64(*frac),
                    ]);
                }
            }
            Ok(vec![csv.finish()?])
        }
    }
}

fn run_construct(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
    k_max: usize,
) -> Result<Vec<PathBuf>> {
    let construction = construct_thm2_potential(sys, k_max, &config.mc, ScanGrid::PowersOfThree)?;
    let json = write_json(
        dir,
        "construction.json",
        &config.config_json(),
        serde_json::json!({
            "n_seq": construction.n_seq(),
            "shells": construction.shells(),
        }),
    )?;
    // a window of the sampled potential along the orbit of (u0, 1)
    let base_u = sys.u0().to_f64();
    let window = *construction.n_seq().last().unwrap();
    let runs = construction.runs_from_base(base_u, 0, window.min(100_000))?;
    let mut csv = CsvFile::create(dir, "potential.csv", meta, SCHEMA_CONSTRUCT_POTENTIAL);
    let mut n = 0u64;
    for (v, len) in runs {
        // encode runs compactly: one row per run start
        csv.row(&[n.to_string(), v.to_string()]);
        n += len;
    }
    Ok(vec![json, csv.finish()?])
}

#[allow(clippy::too_many_arguments)]
fn run_dos(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
    variant: DosVariant,
    degree: usize,
    n: usize,
    side: Side,
    max_level: u64,
) -> Result<Vec<PathBuf>> {
    match variant {
        DosVariant::Spatial => {
            let est = dos_spatial(sys, SpatialRegion { max_level }, degree, &config.mc)?;
            let mut csv = CsvFile::create(dir, "spatial_moments.csv", meta, SCHEMA_SPATIAL_MOMENTS);
            let se = est.estimate.stderr.as_ref().unwrap();
            for (d, m) in est.estimate.moments.iter().enumerate() {
                csv.row(&[d.to_string(), fmt_f64(*m), fmt_f64(se[d])]);
            }
            Ok(vec![csv.finish()?])
        }
        DosVariant::Truncation => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let src = PotentialSource::tower(Arc::new(blocks));
            let dk = dos_truncation(&src, n, side, TruncationVariant::Dk, degree)?;
            let dktilde = dos_truncation(&src, n, side, TruncationVariant::DkTilde, degree)?;
            let mut csv = CsvFile::create(dir, "moments.csv", meta, SCHEMA_DOS_MOMENTS);
            for d in 0..=degree {
                csv.row(&[
                    d.to_string(),
                    fmt_f64(dk.moments[d]),
                    fmt_f64(dktilde.moments[d]),
                ]);
            }
            let mut paths = vec![csv.finish()?];
            if let Some(h) = &dktilde.histogram {
                let mut hist = CsvFile::create(dir, "histogram.csv", meta, SCHEMA_DOS_HISTOGRAM);
                for (i, m) in h.masses.iter().enumerate() {
                    hist.row(&[fmt_f64(h.edges[i]), fmt_f64(h.edges[i + 1]), fmt_f64(*m)]);
                }
                paths.push(hist.finish()?);
            }
            Ok(paths)
        }
        DosVariant::Gap => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let src = PotentialSource::tower(Arc::new(blocks));
            let schedule: Vec<usize> = (0..6).map(|i| n.max(8) << i).collect();
            let mut csv = CsvFile::create(dir, "gap.csv", meta, SCHEMA_DOS_GAP);
            for d in 1..=degree {
                let rows = moment_gap(&src, &schedule, d, side)?;
                for r in rows {
                    csv.row(&[
                        r.n.to_string(),
                        d.to_string(),
                        fmt_f64(r.dk_moment),
                        fmt_f64(r.dktilde_moment),
                        fmt_f64(r.gap),
                        fmt_f64(r.n_gap),
                    ]);
                }
            }
            Ok(vec![csv.finish()?])
        }
        DosVariant::Counterexample => {
            let (values, measures) = alternating_doubling(20);
            let fam = build_spatial_counterexample(&values, &measures)?;
            let mut csv =
                CsvFile::create(dir, "counterexample.csv", meta, SCHEMA_DOS_COUNTEREXAMPLE);
            for (l, (mu, s)) in fam.mu_cum.iter().zip(fam.first_moments.iter()).enumerate() {
                csv.row(&[(l + 1).to_string(), fmt_f64(mu.to_f64()), fmt_f64(s.to_f64())]);
            }
            Ok(vec![csv.finish()?])
        }
        DosVariant::Scan => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let src = PotentialSource::tower(Arc::new(blocks));
            let schedule: Vec<u64> = (1..=config.s_max).map(|s| 3u64.pow(s)).collect();
            let scan = dos_limit_scan(&src, &[0.0, 1.0], &schedule, side)?;
            let mut csv = CsvFile::create(dir, "dos_scan.csv", meta, SCHEMA_DOS_SCAN);
            for (nn, v) in &scan.series {
                csv.row(&[nn.to_string(), fmt_f64(*v)]);
            }
            let json = write_json(
                dir,
                "dos_scan.json",
                &config.config_json(),
                serde_json::json!({
                    "liminf_est": scan.liminf_est,
                    "limsup_est": scan.limsup_est,
                    "side": format!("{side}"),
                }),
            )?;
            Ok(vec![csv.finish()?, json])
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_lyapunov(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
    variant: LyapunovVariant,
    e: f64,
    e_grid: (f64, f64, f64),
    threshold: f64,
) -> Result<Vec<PathBuf>> {
    let grid: Vec<f64> = {
        let (lo, hi, step) = e_grid;
        if !(step > 0.0 && hi > lo) {
            return Err(Error::Config("bad energy grid".into()));
        }
        let count = ((hi - lo) / step).round() as usize;
        (0..=count).map(|i| lo + i as f64 * step).collect()
    };
    match variant {
        LyapunovVariant::Scan => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let src = PotentialSource::tower(Arc::new(blocks));
            let rows = exponent_scan(&src, &grid, config.s_max)?;
            let mut csv = CsvFile::create(dir, "exponent_scan.csv", meta, SCHEMA_LYAPUNOV_SCAN);
            for r in &rows {
                csv.row(&scan_row_fields(&r.estimates));
            }
            Ok(vec![csv.finish()?])
        }
        LyapunovVariant::GapUpperVsLower => {
            let construction = Arc::new(construct_thm2_potential(
                sys,
                4,
                &config.mc,
                ScanGrid::PowersOfThree,
            )?);
            let base_u = sys.u0().to_f64();
            let rep = gap_demo_upper_vs_lower(e, config.c1, construction, base_u, config.s_max)?;
            let json = write_json(
                dir,
                "gap_upper_vs_lower.json",
                &config.config_json(),
                serde_json::to_value(&rep).unwrap(),
            )?;
            let mut csv = CsvFile::create(dir, "gap_series.csv", meta, SCHEMA_LYAPUNOV_SERIES);
            for (s, v) in &rep.series_forward {
                csv.row(&[
                    s.to_string(),
                    3u64.pow(*s).to_string(),
                    fmt_f64(*v),
                    String::new(),
                ]);
            }
            Ok(vec![json, csv.finish()?])
        }
        LyapunovVariant::GapForwardVsBackward => {
            let blocks = Arc::new(build_blocks(sys, config.system.k_range, config.system.bit_cap)?);
            let rep = gap_demo_forward_vs_backward(e, config.c1, blocks, config.s_max)?;
            let json = write_json(
                dir,
                "gap_forward_vs_backward.json",
                &config.config_json(),
                serde_json::to_value(&rep).unwrap(),
            )?;
            let mut csv = CsvFile::create(dir, "gap_series.csv", meta, SCHEMA_LYAPUNOV_SERIES);
            let empty = Vec::new();
            let back = rep.series_backward.as_ref().unwrap_or(&empty);
            for (i, (s, v)) in rep.series_forward.iter().enumerate() {
                let b = back.get(i).map(|x| fmt_f64(x.1)).unwrap_or_default();
                csv.row(&[s.to_string(), 3u64.pow(*s).to_string(), fmt_f64(*v), b]);
            }
            Ok(vec![json, csv.finish()?])
        }
        LyapunovVariant::Avalanche => {
            let rep = calibrate_avalanche(
                config.mc.samples.min(2000),
                27,
                1e3,
                config.c1,
                config.mc.seed,
            )?;
            let json = write_json(
                dir,
                "avalanche.json",
                &config.config_json(),
                serde_json::to_value(&rep).unwrap(),
            )?;
            Ok(vec![json])
        }
        LyapunovVariant::Ac => {
            let blocks = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
            let src = PotentialSource::tower(Arc::new(blocks));
            let rows = exponent_scan(&src, &grid, config.s_max)?;
            let mut csv = CsvFile::create(dir, "ac_scan.csv", meta, SCHEMA_AC_SCAN);
            for r in &rows {
                let min_upper = r.estimates.lbar_plus.min(r.estimates.lbar_minus);
                csv.row(&[
                    fmt_f64(r.e),
                    fmt_f64(min_upper),
                    (min_upper < threshold).to_string(),
                ]);
            }
            Ok(vec![csv.finish()?])
        }
    }
}

fn scan_row_fields(est: &ExponentEstimates) -> Vec<String> {
    vec![
        fmt_f64(est.e),
        fmt_f64(est.lbar_plus),
        fmt_f64(est.lunder_plus),
        fmt_f64(est.lbar_minus),
        fmt_f64(est.lunder_minus),
        est.s_max.to_string(),
    ]
}

fn run_probe(
    config: &ExperimentConfig,
    sys: &RotationSystem,
    dir: &Path,
    meta: &[(String, String)],
    n: usize,
) -> Result<Vec<PathBuf>> {
    // two base points of the same tower plus the free operator
    let blocks0 = build_blocks(sys, config.system.k_range, config.system.bit_cap)?;
    let shifted = RotationSystem::new(
        sys.alpha().clone(),
        sys.partial_quotients().to_vec(),
        sys.rotate(1),
    )?;
    let blocks1 = build_blocks(&shifted, config.system.k_range, config.system.bit_cap)?;
    let sources = vec![
        PotentialSource::tower(Arc::new(blocks0)),
        PotentialSource::tower(Arc::new(blocks1)),
        PotentialSource::constant(Rational::new()),
    ];
    let probe = spectrum_probe(&sources, n, config.tolerances.eigen_tol, config.tolerances.fattening)?;
    let mut csv = CsvFile::create(dir, "spectrum.csv", meta, SCHEMA_SPECTRUM);
    for (i, evs) in probe.eigensets.iter().enumerate() {
        for (j, e) in evs.iter().enumerate() {
            csv.row(&[i.to_string(), j.to_string(), fmt_f64(*e)]);
        }
    }
    let json = write_json(
        dir,
        "probe.json",
        &config.config_json(),
        serde_json::json!({
            "pairwise": probe.pairwise,
            "fattening": probe.fattening,
            "n": n,
        }),
    )?;
    Ok(vec![csv.finish()?, json])
}

/// Help text block documenting every CSV schema (kept in lockstep with the
/// writer constants).
pub fn schema_help() -> String {
    format!(
        "artifact schemas (CSV headers):\n  blocks.csv: {SCHEMA_BLOCKS}\n  witness_forward.csv: {SCHEMA_WITNESS}\n  backward.csv: {SCHEMA_BACKWARD}\n  cesaro.csv: {SCHEMA_CESARO}\n  hopf.csv: {SCHEMA_HOPF}\n  potential.csv: {SCHEMA_CONSTRUCT_POTENTIAL}\n  spatial_moments.csv: {SCHEMA_SPATIAL_MOMENTS}\n  moments.csv: {SCHEMA_DOS_MOMENTS}\n  histogram.csv: {SCHEMA_DOS_HISTOGRAM}\n  gap.csv: {SCHEMA_DOS_GAP}\n  counterexample.csv: {SCHEMA_DOS_COUNTEREXAMPLE}\n  dos_scan.csv: {SCHEMA_DOS_SCAN}\n  exponent_scan.csv: {SCHEMA_LYAPUNOV_SCAN}\n  gap_series.csv: {SCHEMA_LYAPUNOV_SERIES}\n  ac_scan.csv: {SCHEMA_AC_SCAN}\n  spectrum.csv: {SCHEMA_SPECTRUM}"
    )
}

/// Stable machine-readable error envelope for stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        }
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(command: CommandConfig, out: &str) -> ExperimentConfig {
        ExperimentConfig {
            command,
            system: SystemConfig {
                alpha: AlphaSpec::Golden,
                u0: "1".into(),
                k_range: 3,
                bit_cap: 4096,
            },
            s_max: 6,
            mc: MonteCarloConfig::new(100, 42),
            tolerances: Tolerances::default(),
            c1: 10.0,
            out_dir: out.into(),
            threads: None,
        }
    }

    #[test]
    fn config_round_trips() {
        let cfg = base_config(CommandConfig::Blocks, "/tmp/x");
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation_gates() {
        let mut cfg = base_config(CommandConfig::Blocks, "/tmp/x");
        cfg.system.k_range = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = base_config(CommandConfig::Blocks, "/tmp/x");
        cfg.mc.samples = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn blocks_run_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(CommandConfig::Blocks, dir.path().to_str().unwrap());
        let paths1 = run(&cfg).unwrap();
        let body1 = std::fs::read(&paths1[0]).unwrap();
        let paths2 = run(&cfg).unwrap();
        let body2 = std::fs::read(&paths2[0]).unwrap();
        assert_eq!(body1, body2);
        // header row k = 0 carries p = 16, q = 4
        let text = String::from_utf8(body1).unwrap();
        let row = text
            .lines()
            .find(|l| l.starts_with("0,"))
            .expect("row for k = 0");
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[2], "16");
        assert_eq!(fields[3], "4");
    }

    #[test]
    fn schema_help_matches_writers() {
        let help = schema_help();
        for schema in [
            SCHEMA_BLOCKS,
            SCHEMA_WITNESS,
            SCHEMA_BACKWARD,
            SCHEMA_CESARO,
            SCHEMA_HOPF,
            SCHEMA_DOS_GAP,
            SCHEMA_LYAPUNOV_SCAN,
            SCHEMA_SPECTRUM,
        ] {
            assert!(help.contains(schema), "missing schema {schema}");
        }
    }

    #[test]
    fn error_envelope_kind_and_code() {
        let e = Error::Config("nope".into());
        let s = error_json(&e);
        assert!(s.contains("\"kind\":\"ConfigError\""));
        assert!(s.contains("\"exit_code\":2"));
    }

    #[test]
    fn cesaro_run_emits_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(
            CommandConfig::Birkhoff {
                variant: BirkhoffVariant::Cesaro,
                depth: 8,
            },
            dir.path().to_str().unwrap(),
        );
        let paths = run(&cfg).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(text.starts_with("# tool: ergodeq"));
        assert!(text.contains(SCHEMA_CESARO));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 9);
    }
}
