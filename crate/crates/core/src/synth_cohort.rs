//! Seeded synthetic PD-like and HC-like handwriting cohorts.
//!
//! A template is a sequence of on-surface segments separated by in-air gaps.
//! PD trials add a sinusoidal tremor, stretch the time axis by
//! `1 / speed_factor`, shrink successive strokes and jitter the pressure.
//! All random draws are made whatever the label, so a zero-effect severity
//! gives PD and HC trials that are sample-for-sample identical.
//!
//! Segment and gap lengths are whole multiples of three sample intervals so
//! that timestamps (`round(k · 1000 / 150)` ms) scale exactly with the
//! stretch.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, derive_path, rng_from};
use crate::signal_io::{
    write_trial_file, CohortManifest, Label, ManifestRecord, Sample, Trial,
    DEFAULT_SAMPLING_RATE_HZ,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    /// Archimedean spiral x = aθ·cosθ, y = aθ·sinθ drawn in one stroke.
    Spiral,
    /// Cursive loops made of summed sinusoids.
    Cursive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub name: String,
    pub kind: TemplateKind,
    pub segments: usize,
    pub loops_per_segment: usize,
    /// Sample intervals per segment for an unimpaired writer; a multiple of 3.
    pub segment_intervals: usize,
}

impl TaskTemplate {
    fn cursive(name: &str, segments: usize, loops: usize, intervals: usize) -> Self {
        TaskTemplate {
            name: name.into(),
            kind: TemplateKind::Cursive,
            segments,
            loops_per_segment: loops,
            segment_intervals: intervals,
        }
    }

    pub fn spiral() -> Self {
        TaskTemplate {
            name: "spiral".into(),
            kind: TemplateKind::Spiral,
            segments: 1,
            loops_per_segment: 3,
            segment_intervals: 720,
        }
    }

    /// The eight standard tasks: spiral, three repeated-letter tasks, three
    /// words and a sentence.
    pub fn standard_tasks() -> Vec<TaskTemplate> {
        vec![
            Self::spiral(),
            Self::cursive("l", 2, 4, 240),
            Self::cursive("le", 2, 4, 270),
            Self::cursive("les", 3, 3, 240),
            Self::cursive("lektorka", 3, 3, 210),
            Self::cursive("porovnat", 3, 3, 210),
            Self::cursive("nepopadnout", 4, 3, 180),
            Self::cursive("sentence", 8, 3, 180),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 || self.loops_per_segment == 0 {
            return Err(Error::InvalidConfig(format!(
                "template {}: empty shape",
                self.name
            )));
        }
        if self.segment_intervals < 6 || !self.segment_intervals.is_multiple_of(3) {
            return Err(Error::InvalidConfig(format!(
                "template {}: segment_intervals must be a multiple of 3 and >= 6",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Severity {
    /// Tablet units.
    pub tremor_amplitude: f64,
    pub tremor_freq_hz: f64,
    /// In (0, 1]; 1 means normal speed.
    pub speed_factor: f64,
    /// In [0, 1); stroke k is scaled by (1 − decay)^k.
    pub amplitude_decay_per_stroke: f64,
    /// Pressure noise standard deviation, device units.
    pub pressure_jitter: f64,
}

impl Severity {
    pub fn none() -> Self {
        Severity {
            tremor_amplitude: 0.0,
            tremor_freq_hz: 5.0,
            speed_factor: 1.0,
            amplitude_decay_per_stroke: 0.0,
            pressure_jitter: 0.0,
        }
    }

    pub fn separable() -> Self {
        Severity {
            tremor_amplitude: 25.0,
            tremor_freq_hz: 5.0,
            speed_factor: 0.6,
            amplitude_decay_per_stroke: 0.08,
            pressure_jitter: 40.0,
        }
    }

    pub fn hard() -> Self {
        Severity {
            tremor_amplitude: 4.0,
            tremor_freq_hz: 5.0,
            speed_factor: 0.92,
            amplitude_decay_per_stroke: 0.02,
            pressure_jitter: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tremor_amplitude >= 0.0
            && self.tremor_freq_hz > 0.0
            && self.speed_factor > 0.0
            && self.speed_factor <= 1.0
            && (0.0..1.0).contains(&self.amplitude_decay_per_stroke)
            && self.pressure_jitter >= 0.0
            && [
                self.tremor_amplitude,
                self.tremor_freq_hz,
                self.speed_factor,
                self.pressure_jitter,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid severity {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_pd: usize,
    pub n_hc: usize,
    pub tasks: Vec<TaskTemplate>,
    pub seed: u64,
    pub severity: Severity,
}

impl CohortSpec {
    /// `"separable"` or `"hard"`, 40 + 40 subjects, all eight tasks.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let severity = match name {
            "separable" => Severity::separable(),
            "hard" => Severity::hard(),
            other => return Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        };
        Ok(CohortSpec {
            n_pd: 40,
            n_hc: 40,
            tasks: TaskTemplate::standard_tasks(),
            seed,
            severity,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pd == 0 || self.n_hc == 0 {
            return Err(Error::InvalidConfig("n_pd and n_hc must be >= 1".into()));
        }
        if self.tasks.is_empty() || self.tasks.len() > 8 {
            return Err(Error::InvalidConfig(
                "between 1 and 8 task templates are required".into(),
            ));
        }
        if self.n_pd > 999 || self.n_hc > 999 {
            return Err(Error::InvalidConfig(
                "at most 999 subjects per group".into(),
            ));
        }
        for t in &self.tasks {
            t.validate()?;
        }
        self.severity.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CohortSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

const JITTER_SD: f64 = 1.5;
const BASE_PRESSURE: f64 = 620.0;
const PRESSURE_NOISE_SD: f64 = 4.0;
const LETTER_HEIGHT: f64 = 700.0;
const LOOP_WIDTH: f64 = 260.0;
const SEGMENT_SPACING: f64 = 300.0;

/// Draws shared by both labels for one trial.
struct Plan {
    size: f64,
    pace: f64,
    gaps: Vec<usize>,
    phase_x: f64,
    phase_y: f64,
}

fn plan(template: &TaskTemplate, rng: &mut ChaCha8Rng) -> Plan {
    Plan {
        size: rng.random_range(0.85..1.15),
        pace: rng.random_range(0.9..1.1),
        gaps: (1..template.segments)
            .map(|_| 3 * rng.random_range(5..=15usize))
            .collect(),
        phase_x: rng.random_range(0.0..2.0 * PI),
        phase_y: rng.random_range(0.0..2.0 * PI),
    }
}

/// Multiple of 3 closest to `v`, at least 6.
fn thirds(v: f64) -> usize {
    ((v / 3.0).round() as usize).max(2) * 3
}

/// Point of segment `s` at parameter `u ∈ [0, 1]` before scaling.
fn shape(template: &TaskTemplate, s: usize, u: f64) -> (f64, f64) {
    match template.kind {
        TemplateKind::Spiral => {
            let theta = 2.0 * PI * template.loops_per_segment as f64 * u;
            let a = 60.0;
            (a * theta * theta.cos(), a * theta * theta.sin())
        }
        TemplateKind::Cursive => {
            let l = template.loops_per_segment as f64;
            let w = LOOP_WIDTH * l;
            let x0 = s as f64 * (w + SEGMENT_SPACING);
            let ph = 2.0 * PI * l * u;
            let x = w * u - 0.35 * LOOP_WIDTH * ph.sin() / PI;
            let y =
                LETTER_HEIGHT * (1.0 - ph.cos()) / 2.0 + 0.12 * LETTER_HEIGHT * (PI * l * u).sin();
            (x0 + x, y)
        }
    }
}

/// Segment origin, used as the fixed point for per-stroke shrinking.
fn origin(template: &TaskTemplate, s: usize) -> (f64, f64) {
    shape(template, s, 0.0)
}

/// One trial of `template`. The subject id is `"synthetic"` and the task id
/// 1; cohort generation overwrites both.
pub fn generate_trial(
    template: &TaskTemplate,
    label: Label,
    severity: &Severity,
    seed: u64,
) -> Result<Trial> {
    template.validate()?;
    severity.validate()?;
    let mut rng = rng_from(derive(seed, 0));
    let plan = plan(template, &mut rng);
    let mut noise = rng_from(derive(seed, 1));
    let effect = match label {
        Label::Pd => *severity,
        Label::Hc => Severity::none(),
    };
    let stretch = |n: usize| thirds(n as f64 / effect.speed_factor);
    let base_len = thirds(template.segment_intervals as f64 * plan.pace);
    let seg_len = stretch(base_len);
    let gaps: Vec<usize> = plan.gaps.iter().map(|&g| stretch(g)).collect();

    let dt_ms = 1000.0 / DEFAULT_SAMPLING_RATE_HZ;
    let mut samples = Vec::new();
    let mut k = 0usize;
    let mut last_xy = (0.0, 0.0);
    let mut push = |k: usize, x: f64, y: f64, on: bool, u: f64, noise: &mut ChaCha8Rng| {
        let n: [f64; 6] = std::array::from_fn(|_| StandardNormal.sample(noise));
        let t_s = k as f64 / DEFAULT_SAMPLING_RATE_HZ;
        let w = 2.0 * PI * effect.tremor_freq_hz * t_s;
        let tx = effect.tremor_amplitude * (w + plan.phase_x).sin();
        let ty = effect.tremor_amplitude * (w + plan.phase_y).sin();
        let pressure = if on {
            let p = BASE_PRESSURE
                + 120.0 * (PI * u).sin()
                + PRESSURE_NOISE_SD * n[2]
                + effect.pressure_jitter * n[3];
            p.round().clamp(1.0, 2047.0) as i64
        } else {
            0
        };
        samples.push(Sample {
            t: (k as f64 * dt_ms).round() as u64,
            x: (x + tx + JITTER_SD * n[0]).round() as i64,
            y: (y + ty + JITTER_SD * n[1]).round() as i64,
            button: u8::from(on),
            azimuth: (1800.0 + 150.0 * (PI * u).cos() + 5.0 * n[4]).round() as i64,
            altitude: (600.0 + 40.0 * (2.0 * PI * u).sin() + 3.0 * n[5]).round() as i64,
            pressure,
        });
    };

    for s in 0..template.segments {
        let scale = plan.size * (1.0 - effect.amplitude_decay_per_stroke).powi(s as i32);
        let (ox, oy) = origin(template, s);
        let point = |u: f64| {
            let (x, y) = shape(template, s, u);
            (
                plan.size * ox + scale * (x - ox),
                plan.size * oy + scale * (y - oy),
            )
        };
        if s > 0 {
            // in-air transit from the previous stroke's end to this start
            let g = gaps[s - 1];
            let start = point(0.0);
            for j in 1..g {
                let f = j as f64 / g as f64;
                let x = last_xy.0 + (start.0 - last_xy.0) * f;
                let y = last_xy.1 + (start.1 - last_xy.1) * f + 80.0 * (PI * f).sin();
                push(k + j, x, y, false, f, &mut noise);
            }
            k += g;
        }
        for j in 0..=seg_len {
            let u = j as f64 / seg_len as f64;
            let (x, y) = point(u);
            push(k + j, x, y, true, u, &mut noise);
            last_xy = (x, y);
        }
        k += seg_len;
    }
    Trial::new("synthetic", 1, label, DEFAULT_SAMPLING_RATE_HZ, samples)
}

pub fn subject_id(label: Label, index: usize) -> String {
    format!("{}{:03}", label.as_str(), index + 1)
}

/// Seed of subject `index` of `label`'s group for task position `task`.
pub fn trial_seed(seed: u64, label: Label, index: usize, task: usize) -> u64 {
    let group = match label {
        Label::Pd => 1,
        Label::Hc => 2,
    };
    derive_path(seed, &[group, index as u64, task as u64])
}

/// All trials (PD subjects first, then HC; tasks in template order) and the
/// manifest pointing at `trials/<subject>_task<id>.txt`.
pub fn generate_cohort(spec: &CohortSpec) -> Result<(Vec<Trial>, CohortManifest)> {
    spec.validate()?;
    let mut trials = Vec::new();
    let mut records = Vec::new();
    for (label, n) in [(Label::Pd, spec.n_pd), (Label::Hc, spec.n_hc)] {
        for i in 0..n {
            let sid = subject_id(label, i);
            for (ti, template) in spec.tasks.iter().enumerate() {
                let mut t = generate_trial(
                    template,
                    label,
                    &spec.severity,
                    trial_seed(spec.seed, label, i, ti),
                )?;
                t.subject_id = sid.clone();
                t.task_id = (ti + 1) as u8;
                records.push(ManifestRecord {
                    subject_id: sid.clone(),
                    task_id: t.task_id,
                    label,
                    path: PathBuf::from("trials").join(format!("{sid}_task{}.txt", t.task_id)),
                });
                trials.push(t);
            }
        }
    }
    Ok((trials, CohortManifest::new(records)))
}

/// Writes trial files and `manifest.json` under `dir`.
pub fn write_cohort(dir: &Path, trials: &[Trial], manifest: &CohortManifest) -> Result<PathBuf> {
    fs::create_dir_all(dir.join("trials"))?;
    for (t, r) in trials.iter().zip(&manifest.records) {
        write_trial_file(t, &dir.join(&r.path))?;
    }
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_effect_is_label_blind() {
        for template in TaskTemplate::standard_tasks() {
            let pd = generate_trial(&template, Label::Pd, &Severity::none(), 17).unwrap();
            let hc = generate_trial(&template, Label::Hc, &Severity::none(), 17).unwrap();
            assert_eq!(pd.samples, hc.samples);
        }
    }

    #[test]
    fn deterministic() {
        let t = TaskTemplate::standard_tasks()[3].clone();
        let a = generate_trial(&t, Label::Pd, &Severity::separable(), 5).unwrap();
        let b = generate_trial(&t, Label::Pd, &Severity::separable(), 5).unwrap();
        assert_eq!(a, b);
        let c = generate_trial(&t, Label::Pd, &Severity::separable(), 6).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn half_speed_doubles_duration() {
        let sev = Severity {
            speed_factor: 0.5,
            ..Severity::none()
        };
        for template in TaskTemplate::standard_tasks() {
            for seed in 0..5 {
                let pd = generate_trial(&template, Label::Pd, &sev, seed).unwrap();
                let hc = generate_trial(&template, Label::Hc, &sev, seed).unwrap();
                let dur = |t: &Trial| t.samples.last().unwrap().t - t.samples[0].t;
                assert_eq!(dur(&pd), 2 * dur(&hc));
            }
        }
    }

    #[test]
    fn cohort_counts() {
        let spec = CohortSpec {
            n_pd: 2,
            n_hc: 2,
            tasks: TaskTemplate::standard_tasks()[..2].to_vec(),
            seed: 1,
            severity: Severity::separable(),
        };
        let (trials, manifest) = generate_cohort(&spec).unwrap();
        assert_eq!(trials.len(), 8);
        assert_eq!(manifest.records.len(), 8);
        assert_eq!(trials.iter().filter(|t| t.task_id == 2).count(), 4);
        manifest.check_unique().unwrap();
        let other = generate_cohort(&CohortSpec { seed: 2, ..spec }).unwrap().0;
        assert_ne!(trials[0].samples, other[0].samples);
    }

    #[test]
    fn strokes_are_separated_by_gaps() {
        let t = &TaskTemplate::standard_tasks()[7];
        let trial = generate_trial(t, Label::Hc, &Severity::none(), 3).unwrap();
        assert_eq!(crate::kinematics::stroke_number(&trial), t.segments);
    }

    #[test]
    fn invalid_specs() {
        let mut s = CohortSpec::preset("separable", 1).unwrap();
        assert!(CohortSpec::preset("easy", 1).is_err());
        s.severity.speed_factor = 0.0;
        assert!(s.validate().is_err());
        s.severity = Severity::hard();
        s.n_pd = 0;
        assert!(s.validate().is_err());
    }
}
