//! Kinematic series and scalars computed from a single trial.
//!
//! Displacement follows the chained definitions used by the feature tables:
//! a displacement sample is already divided by the sample interval
//! (`d_i = |p_{i+1} - p_i| / Δt_i`, units/ms) and velocity divides once more
//! (`v_i = d_i / Δt_i`, units/ms²). The published resultant formula carries
//! `(y_{i+1} + y_i)²`; that is a typo and the difference is used here.

mod emd;

pub use emd::{emd, emd_scalars, emd_with, Emd, EmdConfig, EMD_SCALAR_COUNT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal_io::Trial;
use crate::stats_agg::summarize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Whole,
    First10,
    Last10,
}

impl Phase {
    pub fn tag(self) -> &'static str {
        match self {
            Phase::Whole => "whole",
            Phase::First10 => "first10",
            Phase::Last10 => "last10",
        }
    }

    /// Sample index range of the phase in a trial of `n` samples.
    ///
    /// First10/Last10 span `⌈0.1·n⌉` difference pairs, i.e. `⌈0.1·n⌉ + 1`
    /// samples, never fewer than two and never more than `n`.
    pub fn sample_range(self, n: usize) -> std::ops::Range<usize> {
        let m = (n.div_ceil(10) + 1).max(2).min(n);
        match self {
            Phase::Whole => 0..n,
            Phase::First10 => 0..m,
            Phase::Last10 => n - m..n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Displacement,
    Velocity,
    Acceleration,
    Jerk,
}

impl Kind {
    /// Number of difference pairs the kind consumes.
    pub fn required_pairs(self) -> usize {
        match self {
            Kind::Displacement | Kind::Velocity => 1,
            Kind::Acceleration => 2,
            Kind::Jerk => 3,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Kind::Displacement => "displacement",
            Kind::Velocity => "velocity",
            Kind::Acceleration => "acceleration",
            Kind::Jerk => "jerk",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Kind::Displacement => "units/ms",
            Kind::Velocity => "units/ms^2",
            Kind::Acceleration => "units/ms^3",
            Kind::Jerk => "units/ms^4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Resultant,
    X,
    Y,
}

impl Axis {
    pub fn tag(self) -> &'static str {
        match self {
            Axis::Resultant => "resultant",
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSeries<T> {
    pub name: String,
    pub values: Vec<T>,
    pub units: &'static str,
}

pub fn kinematic_series<T: Scalar>(
    trial: &Trial,
    kind: Kind,
    axis: Axis,
    signed: bool,
    phase: Phase,
) -> Result<KinematicSeries<T>> {
    let samples = &trial.samples[phase.sample_range(trial.len())];
    let pairs = samples.len().saturating_sub(1);
    if pairs < kind.required_pairs() {
        return Err(Error::PhaseTooShort {
            phase: phase.tag(),
            kind: kind.tag(),
            available: pairs,
            required: kind.required_pairs(),
        });
    }

    let dt: Vec<T> = samples
        .windows(2)
        .map(|w| T::from_u64(w[1].t - w[0].t).expect("dt"))
        .collect();
    let mut values: Vec<T> = samples
        .windows(2)
        .zip(&dt)
        .map(|(w, &dt)| {
            let dx = T::from_i64(w[1].x - w[0].x).expect("dx");
            let dy = T::from_i64(w[1].y - w[0].y).expect("dy");
            let delta = match axis {
                Axis::X => dx,
                Axis::Y => dy,
                Axis::Resultant => dx.hypot(dy),
            };
            delta / dt
        })
        .collect();

    if kind != Kind::Displacement {
        values = values.iter().zip(&dt).map(|(&d, &dt)| d / dt).collect();
    }
    // Each further order divides the first difference by the interval that
    // follows the earlier of the two values.
    let extra_orders = kind.required_pairs() - 1;
    for order in 1..=extra_orders {
        values = values
            .windows(2)
            .enumerate()
            .map(|(i, w)| (w[1] - w[0]) / dt[i + order])
            .collect();
    }
    if !signed {
        values.iter_mut().for_each(|v| *v = v.abs());
    }

    let sign_tag = if signed { "_signed" } else { "" };
    Ok(KinematicSeries {
        name: format!("{}_{}{}_{}", kind.tag(), axis.tag(), sign_tag, phase.tag()),
        values,
        units: kind.units(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrokeKind {
    OnSurface,
    InAir,
}

/// Maximal run of constant button state; `start..=end` sample indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stroke {
    pub kind: StrokeKind,
    pub start: usize,
    pub end: usize,
}

impl Stroke {
    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn segment_strokes(trial: &Trial) -> Vec<Stroke> {
    let mut strokes = Vec::new();
    let mut start = 0;
    let s = &trial.samples;
    for i in 1..=s.len() {
        if i == s.len() || s[i].button != s[start].button {
            strokes.push(Stroke {
                kind: if s[start].on_surface() {
                    StrokeKind::OnSurface
                } else {
                    StrokeKind::InAir
                },
                start,
                end: i - 1,
            });
            start = i;
        }
    }
    strokes
}

pub fn stroke_number(trial: &Trial) -> usize {
    segment_strokes(trial)
        .iter()
        .filter(|s| s.kind == StrokeKind::OnSurface)
        .count()
}

/// Trajectory-angle offsets, in tablet units of arc length.
pub const ANGLE_OFFSETS: [u32; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleConfig {
    pub d: f64,
}

impl AngleConfig {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "angle offset must be positive, got {d}"
            )));
        }
        Ok(AngleConfig { d })
    }
}

/// Angle in degrees at `anchor` between the points `d` units of arc length
/// before and after it, for every on-surface anchor whose neighbourhood fits
/// inside its stroke. Empty when no anchor qualifies.
pub fn angle_trajectory<T: Scalar>(trial: &Trial, config: AngleConfig) -> Vec<T> {
    let mut out = Vec::new();
    for stroke in segment_strokes(trial) {
        if stroke.kind != StrokeKind::OnSurface {
            continue;
        }
        let pts: Vec<(T, T)> = trial.samples[stroke.range()]
            .iter()
            .map(|s| (T::from_i64(s.x).expect("x"), T::from_i64(s.y).expect("y")))
            .collect();
        out.extend(polyline_angles(&pts, T::lit(config.d)));
    }
    out
}

/// Angles along one polyline; see [`angle_trajectory`].
pub fn polyline_angles<T: Scalar>(pts: &[(T, T)], d: T) -> Vec<T> {
    if pts.len() < 2 {
        return Vec::new();
    }
    let mut arc = Vec::with_capacity(pts.len());
    arc.push(T::zero());
    for w in pts.windows(2) {
        let last = *arc.last().expect("non-empty");
        arc.push(last + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
    }
    let total = *arc.last().expect("non-empty");

    let point_at = |s: T| -> (T, T) {
        // first segment whose end reaches s
        let k = arc.partition_point(|&a| a < s).clamp(1, pts.len() - 1);
        let (a0, a1) = (arc[k - 1], arc[k]);
        let frac = if a1 > a0 {
            (s - a0) / (a1 - a0)
        } else {
            T::zero()
        };
        let (p0, p1) = (pts[k - 1], pts[k]);
        (p0.0 + (p1.0 - p0.0) * frac, p0.1 + (p1.1 - p0.1) * frac)
    };

    let mut out = Vec::new();
    for (j, &p) in pts.iter().enumerate() {
        let s = arc[j];
        if s - d < T::zero() || s + d > total {
            continue;
        }
        let before = point_at(s - d);
        let after = point_at(s + d);
        let v1 = (before.0 - p.0, before.1 - p.1);
        let v2 = (after.0 - p.0, after.1 - p.1);
        if (v1.0 == T::zero() && v1.1 == T::zero()) || (v2.0 == T::zero() && v2.1 == T::zero()) {
            continue;
        }
        let dot = v1.0 * v2.0 + v1.1 * v2.1;
        let cross = (v1.0 * v2.1 - v1.1 * v2.0).abs();
        out.push(vector_angle_degrees(dot, cross));
    }
    out
}

// atan2 form of arccos(dot / (|v1||v2|)); stays accurate near 0° and 180°.
fn vector_angle_degrees<T: Scalar>(dot: T, cross: T) -> T {
    if cross == T::zero() {
        return if dot < T::zero() {
            T::lit(180.0)
        } else {
            T::zero()
        };
    }
    cross.atan2(dot).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeKind {
    /// Whole-trial resultant velocity.
    Ncv,
    /// Whole-trial resultant acceleration.
    Nca,
    /// Raw pressure.
    Ncp,
}

/// Sign changes of the first difference; zero differences are skipped.
pub fn count_changes<T: Scalar>(series: &[T]) -> usize {
    count_changes_with(series, T::zero())
}

/// As [`count_changes`], treating differences with `|Δ| <= eps` as zero.
pub fn count_changes_with<T: Scalar>(series: &[T], eps: T) -> usize {
    if series.len() < 3 {
        return 0;
    }
    let mut changes = 0;
    let mut last_sign: Option<bool> = None;
    for w in series.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= eps {
            continue;
        }
        let up = d > T::zero();
        if last_sign.is_some_and(|prev| prev != up) {
            changes += 1;
        }
        last_sign = Some(up);
    }
    changes
}

pub fn change_count(trial: &Trial, kind: ChangeKind) -> Result<usize> {
    Ok(match kind {
        ChangeKind::Ncv => count_changes(
            &kinematic_series::<f64>(trial, Kind::Velocity, Axis::Resultant, false, Phase::Whole)?
                .values,
        ),
        ChangeKind::Nca => count_changes(
            &kinematic_series::<f64>(
                trial,
                Kind::Acceleration,
                Axis::Resultant,
                true,
                Phase::Whole,
            )?
            .values,
        ),
        ChangeKind::Ncp => {
            let p: Vec<f64> = trial.samples.iter().map(|s| s.pressure as f64).collect();
            count_changes(&p)
        }
    })
}

/// In-air / on-surface ratio reported when the pen never touches the surface.
pub const RATIO_SENTINEL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Durations {
    pub in_air_ms: u64,
    pub on_surface_ms: u64,
    pub total_ms: u64,
    pub ratio: f64,
}

/// Each interval `[t_i, t_{i+1})` counts toward the pen state at `i`.
pub fn durations(trial: &Trial) -> Durations {
    let (mut air, mut surface) = (0u64, 0u64);
    for w in trial.samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if w[0].on_surface() {
            surface += dt;
        } else {
            air += dt;
        }
    }
    let ratio = if surface == 0 {
        RATIO_SENTINEL
    } else {
        air as f64 / surface as f64
    };
    Durations {
        in_air_ms: air,
        on_surface_ms: surface,
        total_ms: air + surface,
        ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyKind {
    Shannon,
    Renyi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    pub bins: usize,
    pub renyi_order: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            bins: 16,
            renyi_order: 2.0,
        }
    }
}

/// Histogram entropy of a 2-D point set over its bounding box, in bits.
pub fn entropy<T: Scalar>(points: &[(T, T)], kind: EntropyKind) -> Result<T> {
    entropy_with(points, kind, EntropyConfig::default())
}

pub fn entropy_with<T: Scalar>(
    points: &[(T, T)],
    kind: EntropyKind,
    cfg: EntropyConfig,
) -> Result<T> {
    if points.is_empty() {
        return Err(Error::Empty("entropy point set"));
    }
    let probs = histogram_2d(points, cfg.bins);
    Ok(match kind {
        EntropyKind::Shannon => shannon_bits(&probs),
        EntropyKind::Renyi => renyi_bits(&probs, T::lit(cfg.renyi_order)),
    })
}

fn histogram_2d<T: Scalar>(points: &[(T, T)], bins: usize) -> Vec<T> {
    let (mut xmin, mut xmax, mut ymin, mut ymax) =
        (points[0].0, points[0].0, points[0].1, points[0].1);
    for &(x, y) in points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let nb = T::from_count(bins);
    let bin = |v: T, lo: T, hi: T| -> usize {
        if hi <= lo {
            return 0;
        }
        let b = ((v - lo) / (hi - lo) * nb).floor().to_usize().unwrap_or(0);
        b.min(bins - 1)
    };
    let mut counts = vec![0usize; bins * bins];
    for &(x, y) in points {
        counts[bin(x, xmin, xmax) * bins + bin(y, ymin, ymax)] += 1;
    }
    let n = T::from_count(points.len());
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| T::from_count(c) / n)
        .collect()
}

/// Shannon entropy in bits of a probability vector (zeros ignored).
pub fn shannon_bits<T: Scalar>(probs: &[T]) -> T {
    let h: T = probs
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.log2())
        .sum();
    h.max(T::zero())
}

/// Rényi entropy of order `alpha` in bits; order 1 falls back to Shannon.
pub fn renyi_bits<T: Scalar>(probs: &[T], alpha: T) -> T {
    if (alpha - T::one()).abs() < T::lit(1e-12) {
        return shannon_bits(probs);
    }
    let s: T = probs.iter().map(|&p| p.powf(alpha)).sum();
    (s.log2() / (T::one() - alpha)).max(T::zero())
}

pub fn conventional_energy<T: Scalar>(series: &[T]) -> T {
    series.iter().map(|&v| v * v).sum()
}

/// `ψ[i] = x_i² − x_{i−1}·x_{i+1}` for interior `i`.
pub fn teager_kaiser<T: Scalar>(series: &[T]) -> Result<Vec<T>> {
    if series.len() < 3 {
        return Err(Error::TooShort {
            what: "Teager-Kaiser energy",
            required: 3,
            got: series.len(),
        });
    }
    Ok(series
        .windows(3)
        .map(|w| w[1] * w[1] - w[0] * w[2])
        .collect())
}

pub const SNR_WINDOW: usize = 15;
pub const SNR_CLAMP_DB: f64 = 60.0;

/// Signal-to-noise ratio in dB of a series against its 15-sample centered
/// moving average, evaluated where the full window fits.
pub fn snr<T: Scalar>(series: &[T]) -> Result<T> {
    let n = series.len();
    if n < SNR_WINDOW {
        return Err(Error::TooShort {
            what: "SNR",
            required: SNR_WINDOW,
            got: n,
        });
    }
    let w = T::from_count(SNR_WINDOW);
    let (mut p_smooth, mut p_resid) = (T::zero(), T::zero());
    let count = n - SNR_WINDOW + 1;
    for win in series.windows(SNR_WINDOW) {
        let smooth = win.iter().copied().sum::<T>() / w;
        let resid = win[SNR_WINDOW / 2] - smooth;
        p_smooth += smooth * smooth;
        p_resid += resid * resid;
    }
    let count = T::from_count(count);
    let (p_smooth, p_resid) = (p_smooth / count, p_resid / count);
    let clamp = T::lit(SNR_CLAMP_DB);
    if p_smooth == T::zero() {
        return Ok(-clamp);
    }
    if p_resid == T::zero() {
        return Ok(clamp);
    }
    Ok((T::lit(10.0) * (p_smooth / p_resid).log10())
        .max(-clamp)
        .min(clamp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenState {
    pub first_pressure: i64,
    pub first_azimuth: i64,
    pub first_altitude: i64,
    pub last_x: i64,
    pub last_y: i64,
    pub last_pressure: i64,
    pub last_azimuth: i64,
    pub last_altitude: i64,
}

impl PenState {
    pub fn to_array(&self) -> [i64; 8] {
        [
            self.first_pressure,
            self.first_azimuth,
            self.first_altitude,
            self.last_x,
            self.last_y,
            self.last_pressure,
            self.last_azimuth,
            self.last_altitude,
        ]
    }
}

pub fn pen_state_features(trial: &Trial) -> PenState {
    let first = trial.samples.first().expect("valid trial is non-empty");
    let last = trial.samples.last().expect("valid trial is non-empty");
    PenState {
        first_pressure: first.pressure,
        first_azimuth: first.azimuth,
        first_altitude: first.altitude,
        last_x: last.x,
        last_y: last.y,
        last_pressure: last.pressure,
        last_azimuth: last.azimuth,
        last_altitude: last.altitude,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrokeQuantity {
    Pressure,
    Displacement,
    Velocity,
}

impl StrokeQuantity {
    pub fn tag(self) -> &'static str {
        match self {
            StrokeQuantity::Pressure => "pressure",
            StrokeQuantity::Displacement => "displacement",
            StrokeQuantity::Velocity => "velocity",
        }
    }
}

pub const STROKE_STAT_NAMES: [&str; 10] = [
    "max", "min", "mean", "median", "variance", "std", "p1", "p99", "skewness", "kurtosis",
];

/// Per on-surface stroke summary statistics of `quantity`, averaged over
/// strokes, in [`STROKE_STAT_NAMES`] order. `None` when no stroke yields a
/// non-empty series.
pub fn stroke_feature_block<T: Scalar>(trial: &Trial, quantity: StrokeQuantity) -> Option<[T; 10]> {
    let mut acc = [T::zero(); 10];
    let mut used = 0usize;
    for stroke in segment_strokes(trial) {
        if stroke.kind != StrokeKind::OnSurface {
            continue;
        }
        let samples = &trial.samples[stroke.range()];
        let series: Vec<T> = match quantity {
            StrokeQuantity::Pressure => samples
                .iter()
                .map(|s| T::from_i64(s.pressure).expect("p"))
                .collect(),
            StrokeQuantity::Displacement | StrokeQuantity::Velocity => samples
                .windows(2)
                .map(|w| {
                    let dt = T::from_u64(w[1].t - w[0].t).expect("dt");
                    let d = T::from_i64(w[1].x - w[0].x)
                        .expect("dx")
                        .hypot(T::from_i64(w[1].y - w[0].y).expect("dy"))
                        / dt;
                    if quantity == StrokeQuantity::Velocity {
                        d / dt
                    } else {
                        d
                    }
                })
                .collect(),
        };
        let Ok(s) = summarize(&series) else { continue };
        let stats = [
            s.max, s.min, s.mean, s.median, s.variance, s.std, s.p1, s.p99, s.skewness, s.kurtosis,
        ];
        for (a, v) in acc.iter_mut().zip(stats) {
            *a += v;
        }
        used += 1;
    }
    if used == 0 {
        return None;
    }
    let n = T::from_count(used);
    Some(acc.map(|a| a / n))
}

/// EMD scalars of the whole-trial resultant velocity.
pub fn emd_features<T: Scalar>(trial: &Trial) -> Result<[T; EMD_SCALAR_COUNT]> {
    let v = kinematic_series::<T>(trial, Kind::Velocity, Axis::Resultant, false, Phase::Whole)?;
    emd_scalars(&v.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{Label, Sample};

    fn trial_xyt(points: &[(i64, i64, u64)]) -> Trial {
        trial_full(points.iter().map(|&(x, y, t)| (x, y, t, 1, 100)).collect())
    }

    fn trial_full(rows: Vec<(i64, i64, u64, u8, i64)>) -> Trial {
        let samples = rows
            .into_iter()
            .map(|(x, y, t, button, pressure)| Sample {
                t,
                x,
                y,
                button,
                azimuth: 0,
                altitude: 0,
                pressure,
            })
            .collect();
        Trial::new("s", 1, Label::Pd, 150.0, samples).unwrap()
    }

    fn buttons(b: &[u8]) -> Trial {
        trial_full(
            b.iter()
                .enumerate()
                .map(|(i, &b)| (i as i64, 0, (i as u64) * 10, b, 0))
                .collect(),
        )
    }

    #[test]
    fn phase_ranges() {
        assert_eq!(Phase::First10.sample_range(100), 0..11);
        assert_eq!(Phase::Last10.sample_range(100), 89..100);
        assert_eq!(Phase::First10.sample_range(3), 0..2);
        assert_eq!(Phase::Last10.sample_range(2), 0..2);
        assert_eq!(Phase::First10.sample_range(1), 0..1);
    }

    #[test]
    fn displacement_and_velocity_of_345_triangle() {
        let t = trial_xyt(&[(0, 0, 0), (3, 4, 10)]);
        let d =
            kinematic_series::<f64>(&t, Kind::Displacement, Axis::Resultant, false, Phase::Whole)
                .unwrap();
        assert_eq!(d.values, vec![0.5]);
        let v = kinematic_series::<f64>(&t, Kind::Velocity, Axis::Resultant, false, Phase::Whole)
            .unwrap();
        assert!((v.values[0] - 0.05).abs() < 1e-15);
        assert!(matches!(
            kinematic_series::<f64>(&t, Kind::Acceleration, Axis::Resultant, false, Phase::Whole),
            Err(Error::PhaseTooShort { required: 2, .. })
        ));
    }

    #[test]
    fn signed_keeps_direction() {
        let t = trial_xyt(&[(5, 0, 0), (2, 0, 1)]);
        let s =
            kinematic_series::<f64>(&t, Kind::Displacement, Axis::X, true, Phase::Whole).unwrap();
        let u =
            kinematic_series::<f64>(&t, Kind::Displacement, Axis::X, false, Phase::Whole).unwrap();
        assert_eq!(s.values, vec![-3.0]);
        assert_eq!(u.values, vec![3.0]);
    }

    #[test]
    fn stationary_pen_is_all_zero() {
        let t = trial_xyt(&[(7, 7, 0), (7, 7, 5), (7, 7, 9), (7, 7, 20), (7, 7, 21)]);
        for kind in [
            Kind::Displacement,
            Kind::Velocity,
            Kind::Acceleration,
            Kind::Jerk,
        ] {
            for axis in [Axis::Resultant, Axis::X, Axis::Y] {
                let s = kinematic_series::<f64>(&t, kind, axis, true, Phase::Whole).unwrap();
                assert!(s.values.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn acceleration_divides_by_following_interval() {
        // x: 0, 10, 30 at t 0, 10, 20 -> dx/dt: 1, 2 -> v: 0.1, 0.2 -> a: 0.01
        let t = trial_xyt(&[(0, 0, 0), (10, 0, 10), (30, 0, 20)]);
        let a =
            kinematic_series::<f64>(&t, Kind::Acceleration, Axis::X, true, Phase::Whole).unwrap();
        assert_eq!(a.values.len(), 1);
        assert!((a.values[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn strokes_from_buttons() {
        let s = segment_strokes(&buttons(&[1, 1, 0, 0, 1]));
        assert_eq!(
            s,
            vec![
                Stroke {
                    kind: StrokeKind::OnSurface,
                    start: 0,
                    end: 1
                },
                Stroke {
                    kind: StrokeKind::InAir,
                    start: 2,
                    end: 3
                },
                Stroke {
                    kind: StrokeKind::OnSurface,
                    start: 4,
                    end: 4
                },
            ]
        );
        assert_eq!(stroke_number(&buttons(&[1, 1, 0, 0, 1])), 2);
        assert_eq!(segment_strokes(&buttons(&[1, 1, 1])).len(), 1);
        assert_eq!(stroke_number(&buttons(&[0, 0, 0])), 0);
        assert_eq!(
            segment_strokes(&buttons(&[0, 0, 0]))[0].kind,
            StrokeKind::InAir
        );
    }

    #[test]
    fn angles() {
        let line: Vec<(f64, f64)> = (0..50).map(|i| (i as f64 * 3.0, i as f64 * 4.0)).collect();
        for d in ANGLE_OFFSETS {
            let a = polyline_angles(&line, d as f64);
            assert!(!a.is_empty());
            assert!(a.iter().all(|&v| v == 180.0));
        }
        let corner = vec![
            (20.0, 0.0),
            (10.0, 0.0),
            (0.0, 0.0),
            (0.0, 10.0),
            (0.0, 20.0),
        ];
        let a = polyline_angles::<f64>(&corner, 10.0);
        assert_eq!(a.len(), 3);
        assert!((a[1] - 90.0).abs() < 1e-12);
        assert!(polyline_angles(&corner, 100.0).is_empty());

        let t = trial_xyt(&[(0, 0, 0), (10, 0, 10), (20, 0, 20)]);
        assert!(angle_trajectory::<f64>(&t, AngleConfig::new(100.0).unwrap()).is_empty());
        assert!(AngleConfig::new(0.0).is_err());
    }

    #[test]
    fn change_counts() {
        assert_eq!(count_changes(&[1.0, 2.0, 1.0, 2.0, 1.0]), 3);
        assert_eq!(count_changes(&[1.0, 2.0, 3.0, 7.0]), 0);
        assert_eq!(count_changes(&[4.0; 6]), 0);
        assert_eq!(count_changes(&[1.0, 2.0, 2.0, 2.0, 1.0]), 1);
        assert_eq!(count_changes(&[1.0, 0.0]), 0);
        assert_eq!(count_changes_with(&[0.0, 0.1, 0.0, 5.0], 0.5), 0);
    }

    #[test]
    fn duration_attribution() {
        let d = durations(&buttons(&[1, 1, 0, 0, 1]));
        assert_eq!((d.on_surface_ms, d.in_air_ms, d.total_ms), (20, 20, 40));
        assert_eq!(d.ratio, 1.0);
        assert_eq!(durations(&buttons(&[1, 1, 1])).ratio, 0.0);
        assert_eq!(durations(&buttons(&[0, 0, 0])).ratio, RATIO_SENTINEL);
    }

    #[test]
    fn entropy_cases() {
        let grid: Vec<(f64, f64)> = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i as f64, j as f64)))
            .collect();
        assert!((entropy(&grid, EntropyKind::Shannon).unwrap() - 8.0).abs() < 1e-12);
        assert!((entropy(&grid, EntropyKind::Renyi).unwrap() - 8.0).abs() < 1e-12);

        let same = vec![(3.0, 3.0); 10];
        assert_eq!(entropy(&same, EntropyKind::Shannon).unwrap(), 0.0);
        assert_eq!(entropy(&same, EntropyKind::Renyi).unwrap(), 0.0);

        // three points in one corner bin, one in the opposite corner
        let two = vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 1.0)];
        let h = entropy(&two, EntropyKind::Shannon).unwrap();
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 0.8113).abs() < 1e-4);
        let r = entropy(&two, EntropyKind::Renyi).unwrap();
        assert!((r + 0.625f64.log2()).abs() < 1e-12);
        assert!((r - 0.678).abs() < 1e-3);
        assert!(entropy::<f64>(&[], EntropyKind::Shannon).is_err());
    }

    #[test]
    fn energies() {
        assert_eq!(conventional_energy(&[1.0, 2.0, 3.0]), 14.0);
        assert!(teager_kaiser(&[2.5; 5]).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(teager_kaiser(&[0.0, 1.0, 0.0]).unwrap(), vec![1.0]);
        assert!(teager_kaiser(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn snr_cases() {
        let ramp: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(snr(&ramp).unwrap(), 60.0);
        assert_eq!(snr(&[0.0f64; 30]).unwrap(), -60.0);
        assert!(snr(&[1.0f64; 14]).is_err());

        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = crate::rng::rng_from(11);
        let noisy: Vec<f64> = ramp
            .iter()
            .map(|&v| v + 99.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(snr(&noisy).unwrap() < snr(&ramp).unwrap());
    }

    #[test]
    fn pen_state() {
        let text = "3\n0 0 0 1 500 600 100\n10 3 4 1 500 600 110\n20 6 8 1 500 600 120";
        let samples = crate::signal_io::parse_samples(text, &Default::default(), "m").unwrap();
        let t = Trial::new("s", 1, Label::Pd, 150.0, samples).unwrap();
        let p = pen_state_features(&t);
        assert_eq!(
            (p.first_pressure, p.last_pressure, p.last_x, p.last_y),
            (100, 120, 6, 8)
        );

        let one = trial_full(vec![(4, 5, 0, 1, 77)]);
        let p = pen_state_features(&one);
        assert_eq!((p.first_pressure, p.last_pressure), (77, 77));
    }

    #[test]
    fn stroke_blocks() {
        let t = trial_full(vec![(0, 0, 0, 1, 10), (1, 0, 10, 1, 20), (2, 0, 20, 1, 30)]);
        let b = stroke_feature_block::<f64>(&t, StrokeQuantity::Pressure).unwrap();
        assert_eq!(&b[..4], &[30.0, 10.0, 20.0, 20.0]);
        assert!((b[4] - 200.0 / 3.0).abs() < 1e-12);
        assert!((b[5] - (200.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((b[6] - 10.2).abs() < 1e-12);
        assert!((b[7] - 29.8).abs() < 1e-12);
        assert!(b[8].abs() < 1e-12);
        assert!((b[9] + 1.5).abs() < 1e-12);

        let single = trial_full(vec![(0, 0, 0, 0, 0), (0, 0, 10, 1, 40), (0, 0, 20, 0, 0)]);
        let b = stroke_feature_block::<f64>(&single, StrokeQuantity::Pressure).unwrap();
        assert_eq!((b[4], b[8], b[9]), (0.0, 0.0, 0.0));
        assert!(stroke_feature_block::<f64>(&single, StrokeQuantity::Displacement).is_none());

        let twice = trial_full(vec![
            (0, 0, 0, 1, 10),
            (1, 0, 10, 1, 20),
            (2, 0, 20, 1, 30),
            (2, 0, 30, 0, 0),
            (0, 0, 40, 1, 10),
            (1, 0, 50, 1, 20),
            (2, 0, 60, 1, 30),
        ]);
        let a = stroke_feature_block::<f64>(&t, StrokeQuantity::Pressure).unwrap();
        let b = stroke_feature_block::<f64>(&twice, StrokeQuantity::Pressure).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let none = trial_full(vec![(0, 0, 0, 0, 0), (1, 1, 10, 0, 0)]);
        assert!(stroke_feature_block::<f64>(&none, StrokeQuantity::Pressure).is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let t = trial_xyt(&[(0, 0, 0), (3, 4, 10)]);
        let d =
            kinematic_series::<f32>(&t, Kind::Displacement, Axis::Resultant, false, Phase::Whole)
                .unwrap();
        assert_eq!(d.values, vec![0.5f32]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn trial_strategy() -> impl Strategy<Value = Trial> {
            prop::collection::vec((1u64..30, -300i64..300, -300i64..300, 0u8..2), 4..80).prop_map(
                |rows| {
                    let mut t = 0;
                    let samples = rows
                        .into_iter()
                        .map(|(dt, x, y, button)| {
                            t += dt;
                            Sample {
                                t,
                                x,
                                y,
                                button,
                                azimuth: 0,
                                altitude: 0,
                                pressure: 0,
                            }
                        })
                        .collect();
                    Trial::new("p", 2, Label::Hc, 150.0, samples).unwrap()
                },
            )
        }

        proptest! {
            #[test]
            fn unsigned_is_abs_of_signed(trial in trial_strategy()) {
                for kind in [Kind::Displacement, Kind::Velocity, Kind::Acceleration, Kind::Jerk] {
                    for axis in [Axis::Resultant, Axis::X, Axis::Y] {
                        for phase in [Phase::Whole, Phase::First10, Phase::Last10] {
                            let s = kinematic_series::<f64>(&trial, kind, axis, true, phase);
                            let u = kinematic_series::<f64>(&trial, kind, axis, false, phase);
                            match (s, u) {
                                (Ok(s), Ok(u)) => {
                                    prop_assert_eq!(s.values.len(), u.values.len());
                                    for (a, b) in s.values.iter().zip(&u.values) {
                                        prop_assert_eq!(a.abs(), *b);
                                    }
                                }
                                (Err(_), Err(_)) => {}
                                _ => prop_assert!(false, "signed/unsigned disagree on validity"),
                            }
                        }
                    }
                }
            }

            #[test]
            fn phases_nest_in_whole(n in 1usize..500) {
                let whole = Phase::Whole.sample_range(n);
                for p in [Phase::First10, Phase::Last10] {
                    let r = p.sample_range(n);
                    prop_assert!(r.start >= whole.start && r.end <= whole.end);
                }
            }

            #[test]
            fn angles_in_range(trial in trial_strategy(), d in 1.0f64..200.0) {
                for a in angle_trajectory::<f64>(&trial, AngleConfig::new(d).unwrap()) {
                    prop_assert!((0.0..=180.0).contains(&a));
                }
            }

            #[test]
            fn change_count_affine_invariant(
                xs in prop::collection::vec(-50i32..50, 0..60),
                a in 1i32..20,
                b in -100i32..100,
            ) {
                let s: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
                let t: Vec<f64> = xs.iter().map(|&v| (a * v + b) as f64).collect();
                prop_assert_eq!(count_changes(&s), count_changes(&t));
            }

            #[test]
            fn strokes_partition_and_alternate(trial in trial_strategy()) {
                let strokes = segment_strokes(&trial);
                prop_assert_eq!(strokes[0].start, 0);
                prop_assert_eq!(strokes.last().unwrap().end, trial.len() - 1);
                for w in strokes.windows(2) {
                    prop_assert_eq!(w[0].end + 1, w[1].start);
                    prop_assert_ne!(w[0].kind, w[1].kind);
                }
            }
        }
    }
}
