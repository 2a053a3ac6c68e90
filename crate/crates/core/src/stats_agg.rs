//! Statistical summaries, the feature registry and feature matrices.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    angle_trajectory, change_count, conventional_energy, durations, emd_features, entropy,
    kinematic_series, pen_state_features, snr, stroke_feature_block, stroke_number, teager_kaiser,
    AngleConfig, Axis, ChangeKind, EntropyKind, Kind, Phase, StrokeQuantity, ANGLE_OFFSETS,
    EMD_SCALAR_COUNT, RATIO_SENTINEL, STROKE_STAT_NAMES,
};
use crate::scalar::Scalar;
use crate::signal_io::{Label, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummarySet<T> {
    pub mean: T,
    pub median: T,
    pub variance: T,
    pub std: T,
    pub max: T,
    pub min: T,
    pub p1: T,
    pub p99: T,
    pub p_range: T,
    pub skewness: T,
    pub kurtosis: T,
}

pub const SUMMARY_NAMES: [&str; 11] = [
    "mean", "median", "variance", "std", "max", "min", "p1", "p99", "p_range", "skewness",
    "kurtosis",
];

impl<T: Scalar> SummarySet<T> {
    /// Values in [`SUMMARY_NAMES`] order.
    pub fn to_array(&self) -> [T; 11] {
        [
            self.mean,
            self.median,
            self.variance,
            self.std,
            self.max,
            self.min,
            self.p1,
            self.p99,
            self.p_range,
            self.skewness,
            self.kurtosis,
        ]
    }
}

/// Percentile by linear interpolation at position `q·(N−1)` of sorted data.
pub fn percentile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * T::from_count(n - 1);
    let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = pos - T::from_count(lo);
    if frac == T::zero() {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Population moments, excess kurtosis, interpolated percentiles. Skewness
/// and kurtosis are 0 when the variance is 0.
pub fn summarize<T: Scalar>(series: &[T]) -> Result<SummarySet<T>> {
    if series.is_empty() {
        return Err(Error::Empty("series to summarize"));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_count(series.len());
    let constant = sorted[0] == sorted[sorted.len() - 1];
    let mut mean = series.iter().copied().sum::<T>() / n;
    if constant {
        mean = sorted[0];
    } else {
        // one refinement pass removes most of the rounding in the first sum
        mean += series.iter().map(|&x| x - mean).sum::<T>() / n;
    }
    let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
    if !constant {
        for &x in series {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let std = m2.sqrt();
    let (skewness, kurtosis) = if m2 > T::zero() {
        (m3 / (m2 * std), m4 / (m2 * m2) - T::lit(3.0))
    } else {
        (T::zero(), T::zero())
    };
    let p1 = percentile_sorted(&sorted, T::lit(0.01));
    let p99 = percentile_sorted(&sorted, T::lit(0.99));
    Ok(SummarySet {
        mean,
        median: percentile_sorted(&sorted, T::lit(0.5)),
        variance: m2,
        std,
        max: sorted[sorted.len() - 1],
        min: sorted[0],
        p1,
        p99,
        p_range: p99 - p1,
        skewness,
        kurtosis,
    })
}

pub const REGISTRY_VERSION: &str = "inkpark-registry-v1";

/// Number of scalar features each trial contributes.
pub const FEATURE_COUNT: usize = 527;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RawChannel {
    X,
    Y,
    Pressure,
    Azimuth,
    Altitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Block {
    Raw(RawChannel),
    Kin {
        kind: Kind,
        axis: Axis,
        signed: bool,
        phase: Phase,
    },
    TeagerKaiserVelocity,
    ButtonFraction,
    ChangeCounts,
    StrokeNumber,
    Durations,
    Entropy,
    VelocityEnergy,
    Snr,
    Emd,
    Angle(u32),
    PenState,
    StrokeBlock(StrokeQuantity),
}

const ANGLE_STATS: [&str; 5] = ["mean", "median", "std", "p1", "p99"];
const PEN_NAMES: [&str; 8] = [
    "first_pressure",
    "first_azimuth",
    "first_altitude",
    "last_x",
    "last_y",
    "last_pressure",
    "last_azimuth",
    "last_altitude",
];

fn blocks() -> Vec<Block> {
    use Block::*;
    let kin = |kind, axis, signed, phase| Kin {
        kind,
        axis,
        signed,
        phase,
    };
    let mut b = vec![
        Raw(RawChannel::X),
        Raw(RawChannel::Y),
        ButtonFraction,
        Raw(RawChannel::Pressure),
        Raw(RawChannel::Azimuth),
        Raw(RawChannel::Altitude),
        kin(Kind::Displacement, Axis::Resultant, false, Phase::Whole),
        kin(Kind::Velocity, Axis::Resultant, false, Phase::Whole),
        kin(Kind::Displacement, Axis::X, false, Phase::Whole),
        kin(Kind::Displacement, Axis::Y, false, Phase::Whole),
        kin(Kind::Velocity, Axis::X, false, Phase::Whole),
        kin(Kind::Velocity, Axis::Y, false, Phase::Whole),
        kin(Kind::Acceleration, Axis::Resultant, false, Phase::Whole),
        kin(Kind::Jerk, Axis::Resultant, false, Phase::Whole),
        ChangeCounts,
        StrokeNumber,
        Durations,
        Entropy,
        VelocityEnergy,
        TeagerKaiserVelocity,
        Snr,
        Emd,
    ];
    b.extend(ANGLE_OFFSETS.iter().map(|&d| Angle(d)));
    for kind in [Kind::Displacement, Kind::Velocity] {
        for axis in [Axis::X, Axis::Y] {
            b.push(kin(kind, axis, true, Phase::Whole));
        }
    }
    for phase in [Phase::First10, Phase::Last10] {
        b.push(kin(Kind::Displacement, Axis::Resultant, false, phase));
        b.push(kin(Kind::Velocity, Axis::Resultant, false, phase));
        for signed in [false, true] {
            for kind in [Kind::Displacement, Kind::Velocity] {
                for axis in [Axis::X, Axis::Y] {
                    b.push(kin(kind, axis, signed, phase));
                }
            }
        }
    }
    b.push(PenState);
    b.extend([
        StrokeBlock(StrokeQuantity::Pressure),
        StrokeBlock(StrokeQuantity::Displacement),
        StrokeBlock(StrokeQuantity::Velocity),
    ]);
    b
}

impl Block {
    fn names(&self) -> Vec<String> {
        let series = |key: String| {
            SUMMARY_NAMES
                .iter()
                .map(|s| format!("{key}__{s}"))
                .collect::<Vec<_>>()
        };
        match *self {
            Block::Raw(c) => series(format!("raw_{}", raw_tag(c))),
            Block::Kin {
                kind,
                axis,
                signed,
                phase,
            } => series(format!(
                "{}_{}{}_{}",
                kind.tag(),
                axis.tag(),
                if signed { "_signed" } else { "" },
                phase.tag()
            )),
            Block::TeagerKaiserVelocity => series("tkeo_velocity_whole".into()),
            Block::ButtonFraction => vec!["on_surface_fraction".into()],
            Block::ChangeCounts => vec!["ncv".into(), "nca".into(), "ncp".into()],
            Block::StrokeNumber => vec!["stroke_number".into()],
            Block::Durations => vec![
                "in_air_ms".into(),
                "on_surface_ms".into(),
                "total_ms".into(),
                "air_surface_ratio".into(),
            ],
            Block::Entropy => vec!["entropy_shannon_xy".into(), "entropy_renyi2_xy".into()],
            Block::VelocityEnergy => vec!["energy_velocity_whole".into()],
            Block::Snr => vec!["snr_x".into(), "snr_y".into()],
            Block::Emd => {
                let mut v = Vec::with_capacity(EMD_SCALAR_COUNT);
                for k in 1..=3 {
                    v.push(format!("emd_imf{k}_energy"));
                    v.push(format!("emd_imf{k}_entropy"));
                }
                v.push("emd_imf_count".into());
                v
            }
            Block::Angle(d) => ANGLE_STATS
                .iter()
                .map(|s| format!("angle_d{d}__{s}"))
                .collect(),
            Block::PenState => PEN_NAMES.iter().map(|s| s.to_string()).collect(),
            Block::StrokeBlock(q) => STROKE_STAT_NAMES
                .iter()
                .map(|s| format!("stroke_{}__{s}", q.tag()))
                .collect(),
        }
    }

    /// Values for the block; `NaN` marks an absent feature.
    fn compute(&self, trial: &Trial) -> Result<Vec<f64>> {
        let summary = |v: &[f64]| -> Vec<f64> {
            match summarize(v) {
                Ok(s) => s.to_array().to_vec(),
                Err(_) => vec![f64::NAN; 11],
            }
        };
        let velocity =
            || kinematic_series::<f64>(trial, Kind::Velocity, Axis::Resultant, false, Phase::Whole);
        Ok(match *self {
            Block::Raw(c) => {
                let v: Vec<f64> = trial
                    .samples
                    .iter()
                    .map(|s| match c {
                        RawChannel::X => s.x,
                        RawChannel::Y => s.y,
                        RawChannel::Pressure => s.pressure,
                        RawChannel::Azimuth => s.azimuth,
                        RawChannel::Altitude => s.altitude,
                    } as f64)
                    .collect();
                summary(&v)
            }
            Block::Kin {
                kind,
                axis,
                signed,
                phase,
            } => summary(&kinematic_series::<f64>(trial, kind, axis, signed, phase)?.values),
            Block::TeagerKaiserVelocity => match teager_kaiser(&velocity()?.values) {
                Ok(v) => summary(&v),
                Err(_) => vec![f64::NAN; 11],
            },
            Block::ButtonFraction => {
                let on = trial.samples.iter().filter(|s| s.on_surface()).count();
                vec![on as f64 / trial.len() as f64]
            }
            Block::ChangeCounts => [ChangeKind::Ncv, ChangeKind::Nca, ChangeKind::Ncp]
                .iter()
                .map(|&k| change_count(trial, k).map(|c| c as f64))
                .collect::<Result<Vec<_>>>()?,
            Block::StrokeNumber => vec![stroke_number(trial) as f64],
            Block::Durations => {
                let d = durations(trial);
                vec![
                    d.in_air_ms as f64,
                    d.on_surface_ms as f64,
                    d.total_ms as f64,
                    d.ratio,
                ]
            }
            Block::Entropy => {
                let pts: Vec<(f64, f64)> = trial
                    .samples
                    .iter()
                    .map(|s| (s.x as f64, s.y as f64))
                    .collect();
                vec![
                    entropy(&pts, EntropyKind::Shannon)?,
                    entropy(&pts, EntropyKind::Renyi)?,
                ]
            }
            Block::VelocityEnergy => vec![conventional_energy(&velocity()?.values)],
            Block::Snr => {
                let xs: Vec<f64> = trial.samples.iter().map(|s| s.x as f64).collect();
                let ys: Vec<f64> = trial.samples.iter().map(|s| s.y as f64).collect();
                vec![snr(&xs).unwrap_or(f64::NAN), snr(&ys).unwrap_or(f64::NAN)]
            }
            Block::Emd => match emd_features::<f64>(trial) {
                Ok(v) => v.to_vec(),
                Err(Error::TooShort { .. }) => vec![f64::NAN; EMD_SCALAR_COUNT],
                Err(e) => return Err(e),
            },
            Block::Angle(d) => {
                let a = angle_trajectory::<f64>(trial, AngleConfig::new(d as f64)?);
                match summarize(&a) {
                    Ok(s) => vec![s.mean, s.median, s.std, s.p1, s.p99],
                    Err(_) => vec![f64::NAN; ANGLE_STATS.len()],
                }
            }
            Block::PenState => pen_state_features(trial)
                .to_array()
                .iter()
                .map(|&v| v as f64)
                .collect(),
            Block::StrokeBlock(q) => match stroke_feature_block::<f64>(trial, q) {
                Some(v) => v.to_vec(),
                None => vec![f64::NAN; STROKE_STAT_NAMES.len()],
            },
        })
    }
}

fn raw_tag(c: RawChannel) -> &'static str {
    match c {
        RawChannel::X => "x",
        RawChannel::Y => "y",
        RawChannel::Pressure => "pressure",
        RawChannel::Azimuth => "azimuth",
        RawChannel::Altitude => "altitude",
    }
}

/// Ordered, versioned list of feature names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    pub version: String,
    pub names: Vec<String>,
}

impl Default for FeatureRegistry {
    fn default() -> Self {
        FeatureRegistry {
            version: REGISTRY_VERSION.to_string(),
            names: blocks().iter().flat_map(Block::names).collect(),
        }
    }
}

impl FeatureRegistry {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Whether `names` is exactly this registry's column list.
    pub fn matches(&self, names: &[String]) -> bool {
        self.names == names
    }
}

/// Raw feature values of one trial in registry order; absent features are
/// `NaN`.
pub fn extract_trial_features(trial: &Trial) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    for block in blocks() {
        out.extend(block.compute(trial)?);
    }
    debug_assert_eq!(out.len(), FEATURE_COUNT);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub row: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub subject_ids: Vec<String>,
    #[serde(default)]
    pub imputed: Vec<ImputedCell>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn label_signs(&self) -> Vec<i8> {
        self.labels.iter().map(|l| l.sign()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Matrix restricted to the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            subject_ids: self.subject_ids.clone(),
            imputed: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows.len();
        if self.labels.len() != n || self.subject_ids.len() != n {
            return Err(Error::ColumnMismatch(
                "labels/subjects do not match row count".into(),
            ));
        }
        for r in &self.rows {
            if r.len() != self.names.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.names.len(),
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature matrix"));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = self.names.clone();
        header.push("label".into());
        header.push("subject_id".into());
        w.write_record(&header)?;
        for ((row, label), subject) in self.rows.iter().zip(&self.labels).zip(&self.subject_ids) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(label.as_str().to_string());
            rec.push(subject.clone());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let k = header.len();
        if k < 2 || header[k - 2] != "label" || header[k - 1] != "subject_id" {
            return Err(Error::ColumnMismatch(
                "last two columns must be label, subject_id".into(),
            ));
        }
        let names = header[..k - 2].to_vec();
        let (mut rows, mut labels, mut subject_ids) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let row = rec
                .iter()
                .take(k - 2)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse("csv", line, format!("non-numeric value {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let label = match &rec[k - 2] {
                "PD" => Label::Pd,
                "HC" => Label::Hc,
                other => {
                    return Err(Error::parse(
                        "csv",
                        line,
                        format!("invalid label {other:?}"),
                    ))
                }
            };
            rows.push(row);
            labels.push(label);
            subject_ids.push(rec[k - 1].to_string());
        }
        let m = FeatureMatrix {
            names,
            rows,
            labels,
            subject_ids,
            imputed: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_csv(&fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// One row per trial in registry order, absent features replaced by the
/// column median over present, non-sentinel values (0 if none).
pub fn build_feature_matrix(
    trials: &[&Trial],
    registry: &FeatureRegistry,
) -> Result<FeatureMatrix> {
    if trials.is_empty() {
        return Err(Error::Empty("cohort"));
    }
    let task = trials[0].task_id;
    if trials.iter().any(|t| t.task_id != task) {
        return Err(Error::InvalidConfig("trials span several tasks".into()));
    }
    if registry.len() != FEATURE_COUNT {
        return Err(Error::ColumnMismatch(format!(
            "registry has {} names, extractor emits {FEATURE_COUNT}",
            registry.len()
        )));
    }
    let mut rows = trials
        .par_iter()
        .map(|t| extract_trial_features(t))
        .collect::<Result<Vec<_>>>()?;

    let mut imputed = Vec::new();
    for c in 0..registry.len() {
        if rows.iter().all(|r| r[c].is_finite()) {
            continue;
        }
        let mut present: Vec<f64> = rows
            .iter()
            .map(|r| r[c])
            .filter(|v| v.is_finite() && *v != RATIO_SENTINEL)
            .collect();
        present.sort_by(f64::total_cmp);
        let fill = if present.is_empty() {
            0.0
        } else {
            percentile_sorted(&present, 0.5)
        };
        for (i, r) in rows.iter_mut().enumerate() {
            if !r[c].is_finite() {
                r[c] = fill;
                imputed.push(ImputedCell { row: i, column: c });
            }
        }
    }
    imputed.sort_by_key(|cell| (cell.row, cell.column));

    Ok(FeatureMatrix {
        names: registry.names.clone(),
        rows,
        labels: trials.iter().map(|t| t.label).collect(),
        subject_ids: trials.iter().map(|t| t.subject_id.clone()).collect(),
        imputed,
    })
}

/// Provenance sidecar listing imputed cells by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub registry_version: String,
    pub cells: Vec<ImputedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedEntry {
    pub subject_id: String,
    pub feature: String,
}

impl FeatureMatrix {
    pub fn imputation_report(&self) -> ImputationReport {
        ImputationReport {
            registry_version: REGISTRY_VERSION.to_string(),
            cells: self
                .imputed
                .iter()
                .map(|c| ImputedEntry {
                    subject_id: self.subject_ids[c.row].clone(),
                    feature: self.names[c.column].clone(),
                })
                .collect(),
        }
    }
}
