//! Experiment drivers: cumulative-prefix histories, per-window histories,
//! extremal-window search, reference-index comparison and plot-ready
//! emission.
//!
//! Every record is computed independently of its neighbours (windows and
//! prefixes are parallel work items), so output is identical regardless of
//! schedule; regime labels are attached in a sequential pass afterwards.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::coherent::{self, gaussian_overlap, AlphaSeries, CoherentError, EmbeddingMode};
use crate::entropy::{self, EntropyError, LogBase};
use crate::gram::{self, EntanglementSpectrum, GramError, OverlapMatrix};
use crate::majorization::{self, MajorizationError, MajorizationRelation, RegimeLabel};
use crate::timeseries::{partition, PriceSeries, TimeSeriesError, WindowSpec};
use crate::tolerances::Tolerances;
use crate::util::KahanSum;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Coherent(#[from] CoherentError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Majorization(#[from] MajorizationError),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error("InvalidStride: stride must be at least 1")]
    InvalidStride,
    #[error("InvalidQ: Renyi orders must be positive, got {0}")]
    InvalidQ(f64),
    #[error("PurityCrossCheck: prefix {n}: incremental {incremental:e} vs direct {direct:e}")]
    PurityCrossCheck {
        n: usize,
        incremental: f64,
        direct: f64,
    },
    #[error("InsufficientRecords: need at least two records with retained spectra, got {0}")]
    InsufficientRecords(usize),
    #[error("InsufficientOverlap: need at least two shared labels, got {0}")]
    InsufficientOverlap(usize),
    #[error("DegenerateData: {0} has zero variance, correlations are undefined")]
    DegenerateData(&'static str),
    #[error("MissingMetric: records carry no {0} values")]
    MissingMetric(&'static str),
    #[error("IoFailure: {0}")]
    Io(#[from] std::io::Error),
}

/// Knobs shared by every experiment driver.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub embedding: coherent::EmbeddingConfig,
    /// Base entropies are reported in.
    pub base: LogBase,
    /// Rényi orders per record.
    pub qs: Vec<f64>,
    /// How many leading spectrum weights each record keeps for emission.
    pub spectrum_head: usize,
    /// 1-based partial-sum depths tracked per record.
    pub partial_sum_levels: Vec<usize>,
    pub tolerances: Tolerances,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            embedding: coherent::EmbeddingConfig::default(),
            base: LogBase::Bits,
            qs: vec![1.0, 2.0],
            spectrum_head: 15,
            partial_sum_levels: vec![1, 2, 5, 10],
            tolerances: Tolerances::default(),
        }
    }
}

impl AnalysisConfig {
    /// Sorted, deduplicated, validated Rényi orders.
    fn normalized_qs(&self) -> Result<Vec<f64>, AnalysisError> {
        let mut qs = self.qs.clone();
        if let Some(&bad) = qs.iter().find(|&&q| !q.is_finite() || q <= 0.0) {
            return Err(AnalysisError::InvalidQ(bad));
        }
        qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        qs.dedup();
        Ok(qs)
    }

    fn mode_name(&self) -> &'static str {
        match self.embedding.mode {
            EmbeddingMode::Raw => "raw",
            EmbeddingMode::LogPrice => "log-price",
        }
    }

    fn base_name(&self) -> &'static str {
        match self.base {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }

    fn log_of_n(&self, n: usize) -> f64 {
        let nats = (n as f64).ln();
        match self.base {
            LogBase::Bits => nats / std::f64::consts::LN_2,
            LogBase::Nats => nats,
        }
    }
}

/// One row of an analysis: a prefix of the full history or one window.
#[derive(Debug, Clone)]
pub struct AnalysisRecord {
    pub label: String,
    pub n: usize,
    /// `(q, entropy)` in the configured base, ascending in `q`.
    pub entropies: Vec<(f64, f64)>,
    /// `2^E` for the von Neumann entropy in bits; absent on the
    /// purity-only fast path where no spectrum is computed.
    pub n_effective: Option<f64>,
    /// `log N` in the configured base, the entropy ceiling.
    pub e_max: f64,
    /// Step label against the previously evaluated record, where defined.
    pub regime: Option<RegimeLabel>,
    /// Entropy within the saturation window of `log N`.
    pub saturated: bool,
    pub sigma_r: f64,
    pub spectrum_head: Vec<f64>,
    pub partial_sums: Vec<(usize, f64)>,
    /// Full spectrum, retained for majorization queries across records.
    pub full_spectrum: Option<EntanglementSpectrum>,
}

impl AnalysisRecord {
    /// Von Neumann entropy in bits, recovered from the effective state
    /// count.
    pub fn vn_bits(&self) -> Option<f64> {
        self.n_effective.map(f64::log2)
    }

    /// The entropy stored for order `q`, if that order was computed.
    pub fn entropy_at(&self, q: f64) -> Option<f64> {
        self.entropies
            .iter()
            .find(|(stored, _)| *stored == q)
            .map(|(_, v)| *v)
    }
}

fn spectral_record(
    label: String,
    alphas: &AlphaSeries,
    config: &AnalysisConfig,
    qs: &[f64],
) -> Result<(AnalysisRecord, f64), AnalysisError> {
    let o = OverlapMatrix::build(alphas);
    let purity = o.purity();
    let spec = gram::spectrum(&o, &config.tolerances)?;
    let n = alphas.len();
    let vn_bits = entropy::von_neumann(&spec, LogBase::Bits).value;
    let mut entropies = Vec::with_capacity(qs.len());
    for &q in qs {
        entropies.push((q, entropy::renyi(&spec, q, config.base)?.value));
    }
    let e_max = config.log_of_n(n);
    let vn_reported = match config.base {
        LogBase::Bits => vn_bits,
        LogBase::Nats => vn_bits * std::f64::consts::LN_2,
    };
    let sums = majorization::partial_sums(&spec);
    let record = AnalysisRecord {
        label,
        n,
        entropies,
        n_effective: Some(vn_bits.exp2()),
        e_max,
        regime: None,
        saturated: vn_reported >= e_max - config.tolerances.saturation,
        sigma_r: config.embedding.sigma,
        spectrum_head: spec
            .lambdas()
            .iter()
            .take(config.spectrum_head)
            .copied()
            .collect(),
        partial_sums: config
            .partial_sum_levels
            .iter()
            .map(|&l| (l, sums.at(l)))
            .collect(),
        full_spectrum: Some(spec),
    };
    Ok((record, purity))
}

fn prefix_lengths(total: usize, stride: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = (1..=total).step_by(stride).collect();
    if *ns.last().unwrap() != total {
        ns.push(total);
    }
    ns
}

/// Running `Tr O^2` over growing prefixes: pushing amplitude `a_{N+1}`
/// adds `1 + 2 sum_{n<=N} overlap(a_n, a_{N+1})^2` to the unnormalized
/// total, giving the purity in `O(N)` per step instead of `O(N^2)`.
#[derive(Debug, Default)]
pub struct IncrementalPurity {
    alphas: Vec<f64>,
    total: KahanSum,
}

impl IncrementalPurity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, alpha: f64) {
        let mut row = KahanSum::default();
        for &a in &self.alphas {
            let ov = gaussian_overlap(a, alpha);
            row.add(ov * ov);
        }
        self.total.add(1.0 + 2.0 * row.value());
        self.alphas.push(alpha);
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `Tr O^2` of the prefix pushed so far.
    pub fn purity(&self) -> f64 {
        let n = self.alphas.len() as f64;
        self.total.value() / (n * n)
    }
}

/// Prefix histories: one record per evaluated length `1, 1 + stride, ...`
/// plus the full length. Regime labels compare consecutive evaluated
/// records, which matches the step definition only at stride one; the
/// stride is echoed in the metadata envelope. The quadratic entropy is
/// additionally recomputed through the incremental purity path and
/// cross-checked against every evaluated prefix.
pub fn cumulative_analysis(
    series: &PriceSeries,
    config: &AnalysisConfig,
    stride: usize,
) -> Result<Vec<AnalysisRecord>, AnalysisError> {
    if stride == 0 {
        return Err(AnalysisError::InvalidStride);
    }
    let qs = config.normalized_qs()?;
    let alphas = coherent::embed(series, &config.embedding)?;
    let ns = prefix_lengths(alphas.len(), stride);

    let results: Vec<Result<(AnalysisRecord, f64), AnalysisError>> = ns
        .par_iter()
        .map(|&n| spectral_record(n.to_string(), &alphas.prefix(n), config, &qs))
        .collect();
    let mut records = Vec::with_capacity(ns.len());
    let mut purities = Vec::with_capacity(ns.len());
    for r in results {
        let (record, purity) = r?;
        records.push(record);
        purities.push(purity);
    }

    for i in 1..records.len() {
        let label = {
            let prev = records[i - 1].full_spectrum.as_ref().expect("retained");
            let cur = records[i].full_spectrum.as_ref().expect("retained");
            majorization::classify_step(prev, cur, config.tolerances.regime)
        };
        records[i].regime = Some(label);
    }

    let mut incremental = IncrementalPurity::new();
    let mut next = 0usize;
    for (i, &a) in alphas.alphas().iter().enumerate() {
        incremental.push(a);
        if next < ns.len() && ns[next] == i + 1 {
            let inc = incremental.purity();
            let direct = purities[next];
            if (inc - direct).abs() > 1e-8 {
                return Err(AnalysisError::PurityCrossCheck {
                    n: i + 1,
                    incremental: inc,
                    direct,
                });
            }
            next += 1;
        }
    }

    Ok(records)
}

/// Quadratic-entropy fast path over prefixes: no eigendecompositions, so
/// records carry only the `q = 2` entropy and the saturation flag derived
/// from it; spectrum-dependent fields stay empty.
pub fn cumulative_renyi2(
    series: &PriceSeries,
    config: &AnalysisConfig,
    stride: usize,
) -> Result<Vec<AnalysisRecord>, AnalysisError> {
    if stride == 0 {
        return Err(AnalysisError::InvalidStride);
    }
    let alphas = coherent::embed(series, &config.embedding)?;
    let ns = prefix_lengths(alphas.len(), stride);
    let mut incremental = IncrementalPurity::new();
    let mut records = Vec::with_capacity(ns.len());
    let mut next = 0usize;
    for (i, &a) in alphas.alphas().iter().enumerate() {
        incremental.push(a);
        if next < ns.len() && ns[next] == i + 1 {
            let n = i + 1;
            let nats = -incremental.purity().ln();
            let value = match config.base {
                LogBase::Bits => nats / std::f64::consts::LN_2,
                LogBase::Nats => nats,
            };
            let e_max = config.log_of_n(n);
            records.push(AnalysisRecord {
                label: n.to_string(),
                n,
                entropies: vec![(2.0, value.max(0.0))],
                n_effective: None,
                e_max,
                regime: None,
                saturated: value >= e_max - config.tolerances.saturation,
                sigma_r: config.embedding.sigma,
                spectrum_head: Vec::new(),
                partial_sums: Vec::new(),
                full_spectrum: None,
            });
            next += 1;
        }
    }
    Ok(records)
}

/// One record per window of `spec`, with a fixed global width. Windows
/// are independent work items.
pub fn window_analysis(
    series: &PriceSeries,
    spec: &WindowSpec,
    config: &AnalysisConfig,
) -> Result<Vec<AnalysisRecord>, AnalysisError> {
    let qs = config.normalized_qs()?;
    let windows = partition(series, spec);
    let results: Vec<Result<(AnalysisRecord, f64), AnalysisError>> = windows
        .par_iter()
        .map(|w| {
            let alphas = coherent::embed_values(&w.values(), &config.embedding)?;
            spectral_record(w.label.clone(), &alphas, config, &qs)
        })
        .collect();
    results
        .into_iter()
        .map(|r| r.map(|(record, _)| record))
        .collect()
}

/// An extremal window: `universal` says its spectrum is majorization-
/// comparable against every other window, so the extremum holds for
/// every entropy at once; otherwise it is just the entropy
/// argmax/argmin. `tied` flags exact ties resolved to the earliest
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalWindow {
    pub index: usize,
    pub label: String,
    pub entropy_bits: f64,
    pub universal: bool,
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalWindows {
    pub max_entropy: ExtremalWindow,
    pub min_entropy: ExtremalWindow,
}

/// Finds the windows of maximum and minimum entropy. The maximum-entropy
/// witness is the window whose spectrum is majorized by every other
/// window's (so *every* entropy is maximal there); the minimum-entropy
/// witness majorizes every other window. When no universal witness
/// exists the von Neumann argmax/argmin is returned with `universal:
/// false`.
pub fn find_extremal_windows(
    records: &[AnalysisRecord],
    tol: &Tolerances,
) -> Result<ExtremalWindows, AnalysisError> {
    let specs: Vec<&EntanglementSpectrum> = records
        .iter()
        .filter_map(|r| r.full_spectrum.as_ref())
        .collect();
    if specs.len() < 2 || specs.len() != records.len() {
        return Err(AnalysisError::InsufficientRecords(specs.len()));
    }
    let vn: Vec<f64> = specs
        .iter()
        .map(|s| entropy::von_neumann(s, LogBase::Bits).value)
        .collect();

    let relation = |i: usize, j: usize| majorization::compare(specs[i], specs[j], tol.majorization);
    let universal_max = (0..specs.len()).find(|&i| {
        (0..specs.len()).all(|j| {
            j == i
                || matches!(
                    relation(i, j).relation,
                    MajorizationRelation::FirstMajorizedBySecond | MajorizationRelation::Equal
                )
        })
    });
    let universal_min = (0..specs.len()).find(|&i| {
        (0..specs.len()).all(|j| {
            j == i
                || matches!(
                    relation(j, i).relation,
                    MajorizationRelation::FirstMajorizedBySecond | MajorizationRelation::Equal
                )
        })
    });

    let argmax = (0..vn.len())
        .reduce(|best, i| if vn[i] > vn[best] { i } else { best })
        .expect("non-empty");
    let argmin = (0..vn.len())
        .reduce(|best, i| if vn[i] < vn[best] { i } else { best })
        .expect("non-empty");

    let build = |choice: Option<usize>, fallback: usize| {
        let index = choice.unwrap_or(fallback);
        let tied = (0..specs.len())
            .any(|j| j != index && relation(index, j).relation == MajorizationRelation::Equal);
        ExtremalWindow {
            index,
            label: records[index].label.clone(),
            entropy_bits: vn[index],
            universal: choice.is_some(),
            tied,
        }
    };
    Ok(ExtremalWindows {
        max_entropy: build(universal_max, argmax),
        min_entropy: build(universal_min, argmin),
    })
}

/// Least-squares scale and rank/linear correlations between an indicator
/// and a reference, joined on window labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// `argmin_s sum (s x - y)^2 = sum xy / sum x^2`.
    pub scale: f64,
    pub pearson: f64,
    pub spearman: f64,
    pub paired_count: usize,
}

/// Joins on exact labels and reports the fit of `scale * indicator` to
/// the reference.
pub fn compare_to_reference(
    indicator: &[(String, f64)],
    reference: &[(String, f64)],
) -> Result<ComparisonReport, AnalysisError> {
    let lookup: HashMap<&str, f64> = reference
        .iter()
        .map(|(label, v)| (label.as_str(), *v))
        .collect();
    let pairs: Vec<(f64, f64)> = indicator
        .iter()
        .filter_map(|(label, x)| lookup.get(label.as_str()).map(|&y| (*x, y)))
        .collect();
    if pairs.len() < 2 {
        return Err(AnalysisError::InsufficientOverlap(pairs.len()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let sum_xy: f64 = pairs.iter().map(|(x, y)| x * y).sum();
    let sum_xx: f64 = xs.iter().map(|x| x * x).sum();
    if sum_xx == 0.0 {
        return Err(AnalysisError::DegenerateData("indicator"));
    }
    Ok(ComparisonReport {
        scale: sum_xy / sum_xx,
        pearson: pearson(&xs, &ys)?,
        spearman: pearson(&ranks(&xs), &ranks(&ys))?,
        paired_count: pairs.len(),
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 {
        return Err(AnalysisError::DegenerateData("indicator"));
    }
    if vy == 0.0 {
        return Err(AnalysisError::DegenerateData("reference"));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Pulls a `(label, value)` indicator out of records for reference
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMetric {
    /// The stored `q = 2` entropy.
    Renyi2,
    /// The effective state count `2^E`.
    EffectiveStates,
}

pub fn indicator_series(
    records: &[AnalysisRecord],
    metric: CompareMetric,
) -> Result<Vec<(String, f64)>, AnalysisError> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let value = match metric {
            CompareMetric::Renyi2 => r
                .entropy_at(2.0)
                .ok_or(AnalysisError::MissingMetric("q = 2 entropy"))?,
            CompareMetric::EffectiveStates => r
                .n_effective
                .ok_or(AnalysisError::MissingMetric("effective state count"))?,
        };
        out.push((r.label.clone(), value));
    }
    Ok(out)
}

/// Output shapes for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Run description echoed into every output so no flag can change the
/// math silently.
#[derive(Debug, Clone, Default)]
pub struct RunMetadata {
    pub window: String,
    pub stride: Option<usize>,
    /// `spectral` or `incremental-purity`.
    pub method: String,
    /// `(key, value)` echoes of input provenance (paths, column names).
    pub inputs: Vec<(String, String)>,
    pub reference_aggregation: Option<String>,
    pub comparison: Option<ComparisonReport>,
}

/// Conventions are fixed at build time and recorded in each envelope.
pub const WEEK_CONVENTION: &str = "iso-8601-week";
pub const MONTH_CONVENTION: &str = "calendar-month";

fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        format!("{x:.11e}").parse().expect("f64 round trip")
    }
}

fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_q(q: f64) -> String {
    format!("{q}")
}

fn regime_cell(label: &RegimeLabel) -> String {
    if label.strict {
        label.label.to_string()
    } else {
        format!("{}~", label.label)
    }
}

fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round12(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Writes records to `sink`.
///
/// CSV: one `#` metadata line, a fixed header `label,n,E_<q>...,
/// n_effective,e_max,regime,saturated,sigma_r,spectrum_1..k,sum_<l>...`,
/// one row per record, floats with 12 significant digits, empty cells for
/// absent values, regime suffixed `~` when it holds only within the
/// labeling tolerance. An attached comparison becomes a trailing `#`
/// line. JSON: a `metadata` envelope plus a `records` array mirroring the
/// record structure.
pub fn emit(
    records: &[AnalysisRecord],
    config: &AnalysisConfig,
    meta: &RunMetadata,
    format: OutputFormat,
    sink: &mut dyn Write,
) -> Result<(), AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::InsufficientRecords(0));
    }
    let qs = config.normalized_qs()?;
    match format {
        OutputFormat::Csv => emit_csv(records, config, meta, &qs, sink),
        OutputFormat::Json => emit_json(records, config, meta, &qs, sink),
    }
}

fn emit_csv(
    records: &[AnalysisRecord],
    config: &AnalysisConfig,
    meta: &RunMetadata,
    qs: &[f64],
    sink: &mut dyn Write,
) -> Result<(), AnalysisError> {
    let qs_list = qs.iter().map(|q| fmt_q(*q)).collect::<Vec<_>>().join(";");
    let stride = meta
        .stride
        .map(|s| s.to_string())
        .unwrap_or_else(|| "-".into());
    writeln!(
        sink,
        "#histent version={} method={} window={} stride={} sigma_r={} mode={} base={} qs={} spectrum_head={} week={} month={}",
        env!("CARGO_PKG_VERSION"),
        meta.method,
        meta.window,
        stride,
        config.embedding.sigma,
        config.mode_name(),
        config.base_name(),
        qs_list,
        config.spectrum_head,
        WEEK_CONVENTION,
        MONTH_CONVENTION,
    )?;

    let mut header = vec!["label".to_string(), "n".to_string()];
    for q in qs {
        header.push(format!("E_{}", fmt_q(*q)));
    }
    header.extend(
        ["n_effective", "e_max", "regime", "saturated", "sigma_r"]
            .iter()
            .map(|s| s.to_string()),
    );
    for k in 1..=config.spectrum_head {
        header.push(format!("spectrum_{k}"));
    }
    for l in &config.partial_sum_levels {
        header.push(format!("sum_{l}"));
    }
    writeln!(sink, "{}", header.join(","))?;

    for r in records {
        let mut row = vec![r.label.clone(), r.n.to_string()];
        for q in qs {
            row.push(r.entropy_at(*q).map(fmt12).unwrap_or_default());
        }
        row.push(r.n_effective.map(fmt12).unwrap_or_default());
        row.push(fmt12(r.e_max));
        row.push(r.regime.as_ref().map(regime_cell).unwrap_or_default());
        row.push(r.saturated.to_string());
        row.push(fmt12(r.sigma_r));
        for k in 0..config.spectrum_head {
            row.push(
                r.spectrum_head
                    .get(k)
                    .map(|v| fmt12(*v))
                    .unwrap_or_default(),
            );
        }
        for l in &config.partial_sum_levels {
            row.push(
                r.partial_sums
                    .iter()
                    .find(|(stored, _)| stored == l)
                    .map(|(_, v)| fmt12(*v))
                    .unwrap_or_default(),
            );
        }
        writeln!(sink, "{}", row.join(","))?;
    }

    if let Some(c) = &meta.comparison {
        writeln!(
            sink,
            "#comparison scale={} pearson={} spearman={} pairs={}",
            fmt12(c.scale),
            fmt12(c.pearson),
            fmt12(c.spearman),
            c.paired_count
        )?;
    }
    Ok(())
}

fn emit_json(
    records: &[AnalysisRecord],
    config: &AnalysisConfig,
    meta: &RunMetadata,
    qs: &[f64],
    sink: &mut dyn Write,
) -> Result<(), AnalysisError> {
    let comparison = meta.comparison.as_ref().map(|c| {
        json!({
            "scale": json_number(c.scale),
            "pearson": json_number(c.pearson),
            "spearman": json_number(c.spearman),
            "paired_count": c.paired_count,
        })
    });
    let inputs: serde_json::Map<String, serde_json::Value> = meta
        .inputs
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let metadata = json!({
        "generator": "histent",
        "version": env!("CARGO_PKG_VERSION"),
        "method": meta.method,
        "window": meta.window,
        "stride": meta.stride,
        "sigma_r": json_number(config.embedding.sigma),
        "mode": config.mode_name(),
        "base": config.base_name(),
        "qs": qs.iter().map(|&q| json_number(q)).collect::<Vec<_>>(),
        "spectrum_head": config.spectrum_head,
        "partial_sum_levels": config.partial_sum_levels,
        "week_convention": WEEK_CONVENTION,
        "month_convention": MONTH_CONVENTION,
        "inputs": inputs,
        "reference_aggregation": meta.reference_aggregation,
        "comparison": comparison,
    });

    let rows: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            let entropies: serde_json::Map<String, serde_json::Value> = r
                .entropies
                .iter()
                .map(|(q, v)| (format!("E_{}", fmt_q(*q)), json_number(*v)))
                .collect();
            let sums: serde_json::Map<String, serde_json::Value> = r
                .partial_sums
                .iter()
                .map(|(l, v)| (format!("sum_{l}"), json_number(*v)))
                .collect();
            json!({
                "label": r.label,
                "n": r.n,
                "entropies": entropies,
                "n_effective": r.n_effective.map(json_number),
                "e_max": json_number(r.e_max),
                "regime": r.regime.as_ref().map(|g| json!({
                    "label": g.label.to_string(),
                    "strict": g.strict,
                })),
                "saturated": r.saturated,
                "sigma_r": json_number(r.sigma_r),
                "spectrum_head": r.spectrum_head.iter().map(|&v| json_number(v)).collect::<Vec<_>>(),
                "partial_sums": sums,
            })
        })
        .collect();

    let doc = json!({ "metadata": metadata, "records": rows });
    serde_json::to_writer_pretty(&mut *sink, &doc).map_err(std::io::Error::other)?;
    writeln!(sink)?;
    Ok(())
}
