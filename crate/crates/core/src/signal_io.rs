//! Trial files, cohort manifests and the in-memory data model.
//!
//! Trial text format: the first line holds the sample count, each following
//! line holds seven whitespace-separated integers. Writers emit ASCII with
//! single spaces and LF line endings in the default column order
//! `t x y button azimuth altitude pressure`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLING_RATE_HZ: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sample {
    /// Milliseconds.
    pub t: u64,
    pub x: i64,
    pub y: i64,
    /// 0 in air, 1 on surface.
    pub button: u8,
    pub azimuth: i64,
    pub altitude: i64,
    pub pressure: i64,
}

impl Sample {
    pub fn on_surface(&self) -> bool {
        self.button == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "PD")]
    Pd,
    #[serde(rename = "HC")]
    Hc,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Pd => 1,
            Label::Hc => -1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Label> {
        match s {
            1 => Some(Label::Pd),
            -1 => Some(Label::Hc),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pd => "PD",
            Label::Hc => "HC",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub subject_id: String,
    pub task_id: u8,
    pub label: Label,
    pub sampling_rate_hz: f64,
    pub samples: Vec<Sample>,
}

impl Trial {
    /// Build a trial, checking every invariant.
    pub fn new(
        subject_id: impl Into<String>,
        task_id: u8,
        label: Label,
        sampling_rate_hz: f64,
        samples: Vec<Sample>,
    ) -> Result<Self> {
        let trial = Trial {
            subject_id: subject_id.into(),
            task_id,
            label,
            sampling_rate_hz,
            samples,
        };
        trial.validate()?;
        Ok(trial)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.task_id) {
            return Err(Error::InvalidTrial(format!(
                "task_id {} outside 1..=8",
                self.task_id
            )));
        }
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            return Err(Error::InvalidTrial("sampling rate must be positive".into()));
        }
        if self.samples.is_empty() {
            return Err(Error::InvalidTrial("no samples".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.button > 1 {
                return Err(Error::InvalidTrial(format!(
                    "sample {i}: invalid button state {}",
                    s.button
                )));
            }
            if s.pressure < 0 {
                return Err(Error::InvalidTrial(format!(
                    "sample {i}: negative pressure"
                )));
            }
        }
        if let Some(i) = self.samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidTrial(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> TrialMeta {
        TrialMeta {
            subject_id: self.subject_id.clone(),
            task_id: self.task_id,
            label: self.label,
            sampling_rate_hz: self.sampling_rate_hz,
        }
    }
}

/// Trial attributes that live in the manifest rather than in the sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMeta {
    pub subject_id: String,
    pub task_id: u8,
    pub label: Label,
    pub sampling_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    T,
    X,
    Y,
    Button,
    Azimuth,
    Altitude,
    Pressure,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::T,
        Field::X,
        Field::Y,
        Field::Button,
        Field::Azimuth,
        Field::Altitude,
        Field::Pressure,
    ];

    fn name(self) -> &'static str {
        match self {
            Field::T => "t",
            Field::X => "x",
            Field::Y => "y",
            Field::Button => "button",
            Field::Azimuth => "azimuth",
            Field::Altitude => "altitude",
            Field::Pressure => "pressure",
        }
    }
}

/// Column layout of a trial file; a permutation of the seven fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Field>", into = "Vec<Field>")]
pub struct ColumnOrder([Field; 7]);

impl Default for ColumnOrder {
    fn default() -> Self {
        ColumnOrder(Field::ALL)
    }
}

impl ColumnOrder {
    pub fn new(fields: [Field; 7]) -> Result<Self> {
        let distinct: HashSet<Field> = fields.iter().copied().collect();
        if distinct.len() != 7 {
            return Err(Error::InvalidConfig(
                "column order must name each of the 7 fields exactly once".into(),
            ));
        }
        Ok(ColumnOrder(fields))
    }

    pub fn fields(&self) -> &[Field; 7] {
        &self.0
    }
}

impl TryFrom<Vec<Field>> for ColumnOrder {
    type Error = Error;

    fn try_from(v: Vec<Field>) -> Result<Self> {
        let arr: [Field; 7] = v
            .try_into()
            .map_err(|_| Error::InvalidConfig("column order needs exactly 7 fields".into()))?;
        ColumnOrder::new(arr)
    }
}

impl From<ColumnOrder> for Vec<Field> {
    fn from(c: ColumnOrder) -> Self {
        c.0.to_vec()
    }
}

/// Parse the sample block of a trial file. `origin` names the source in
/// diagnostics.
pub fn parse_samples(text: &str, order: &ColumnOrder, origin: &str) -> Result<Vec<Sample>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing sample count header"))?;
    let declared: usize = header.trim().parse().map_err(|_| {
        Error::parse(
            origin,
            header_line,
            format!("invalid sample count {:?}", header.trim()),
        )
    })?;

    let mut samples = Vec::with_capacity(declared);
    let mut prev_t: Option<u64> = None;
    for (line_no, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 7 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 7 fields, found {}", tokens.len()),
            ));
        }
        let mut values = [0i64; 7];
        for (slot, (tok, field)) in tokens.iter().zip(order.fields()).enumerate() {
            values[slot] = tok.parse().map_err(|_| {
                Error::parse(
                    origin,
                    line_no,
                    format!("field {}: non-numeric token {tok:?}", field.name()),
                )
            })?;
        }
        let get = |f: Field| {
            let pos = order
                .fields()
                .iter()
                .position(|&g| g == f)
                .expect("permutation");
            values[pos]
        };

        let t = get(Field::T);
        if t < 0 {
            return Err(Error::parse(origin, line_no, "field t: negative timestamp"));
        }
        let t = t as u64;
        if prev_t.is_some_and(|p| t <= p) {
            return Err(Error::NonIncreasingTimestamp {
                path: origin.to_string(),
                line: line_no,
                value: t as i64,
            });
        }
        prev_t = Some(t);

        let button = get(Field::Button);
        if button != 0 && button != 1 {
            return Err(Error::InvalidButton {
                path: origin.to_string(),
                line: line_no,
                value: button,
            });
        }
        let pressure = get(Field::Pressure);
        if pressure < 0 {
            return Err(Error::parse(
                origin,
                line_no,
                "field pressure: negative value",
            ));
        }
        samples.push(Sample {
            t,
            x: get(Field::X),
            y: get(Field::Y),
            button: button as u8,
            azimuth: get(Field::Azimuth),
            altitude: get(Field::Altitude),
            pressure,
        });
    }

    if samples.len() != declared {
        return Err(Error::CountMismatch {
            path: origin.to_string(),
            declared,
            found: samples.len(),
        });
    }
    Ok(samples)
}

/// Read a trial file. Subject, task, label and sampling rate come from `meta`
/// because the sample file does not carry them.
pub fn parse_trial_file(path: &Path, order: &ColumnOrder, meta: TrialMeta) -> Result<Trial> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    let origin = path.display().to_string();
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::parse(&origin, 0, format!("not ASCII/UTF-8: {e}")))?;
    let samples = parse_samples(text, order, &origin)?;
    Trial::new(
        meta.subject_id,
        meta.task_id,
        meta.label,
        meta.sampling_rate_hz,
        samples,
    )
}

pub fn format_samples(samples: &[Sample]) -> String {
    let mut out = String::with_capacity(samples.len() * 32 + 8);
    let _ = writeln!(out, "{}", samples.len());
    for s in samples {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            s.t, s.x, s.y, s.button, s.azimuth, s.altitude, s.pressure
        );
    }
    out
}

pub fn write_trial_file(trial: &Trial, path: &Path) -> Result<()> {
    trial.validate()?;
    fs::write(path, format_samples(&trial.samples))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub subject_id: String,
    pub task_id: u8,
    pub label: Label,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CohortManifest {
    #[serde(default = "default_rate")]
    pub sampling_rate_hz: f64,
    #[serde(default)]
    pub column_order: ColumnOrder,
    pub records: Vec<ManifestRecord>,
}

fn default_rate() -> f64 {
    DEFAULT_SAMPLING_RATE_HZ
}

impl CohortManifest {
    pub fn new(records: Vec<ManifestRecord>) -> Self {
        CohortManifest {
            sampling_rate_hz: DEFAULT_SAMPLING_RATE_HZ,
            column_order: ColumnOrder::default(),
            records,
        }
    }

    pub fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert((r.subject_id.as_str(), r.task_id)) {
                return Err(Error::DuplicateTrial {
                    subject_id: r.subject_id.clone(),
                    task_id: r.task_id,
                });
            }
        }
        Ok(())
    }

    pub fn counts_by_label(&self) -> BTreeMap<Label, usize> {
        let mut subjects: BTreeMap<Label, HashSet<&str>> = BTreeMap::new();
        for r in &self.records {
            subjects.entry(r.label).or_default().insert(&r.subject_id);
        }
        subjects.into_iter().map(|(l, s)| (l, s.len())).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: CohortManifest = serde_json::from_str(text)?;
        m.check_unique()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Trials of a cohort, in manifest order.
#[derive(Debug, Clone, Default)]
pub struct Cohort {
    pub trials: Vec<Trial>,
}

impl Cohort {
    pub fn task_ids(&self) -> Vec<u8> {
        let mut ids: Vec<u8> = self.trials.iter().map(|t| t.task_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn task(&self, task_id: u8) -> Vec<&Trial> {
        self.trials
            .iter()
            .filter(|t| t.task_id == task_id)
            .collect()
    }

    pub fn by_task(&self) -> BTreeMap<u8, Vec<&Trial>> {
        let mut map: BTreeMap<u8, Vec<&Trial>> = BTreeMap::new();
        for t in &self.trials {
            map.entry(t.task_id).or_default().push(t);
        }
        map
    }
}

pub fn load_cohort(manifest_path: &Path) -> Result<Cohort> {
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path.to_path_buf()));
    }
    let manifest = CohortManifest::from_json(&fs::read_to_string(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let trials = manifest
        .records
        .iter()
        .map(|r| {
            let path = if r.path.is_absolute() {
                r.path.clone()
            } else {
                base.join(&r.path)
            };
            let meta = TrialMeta {
                subject_id: r.subject_id.clone(),
                task_id: r.task_id,
                label: r.label,
                sampling_rate_hz: manifest.sampling_rate_hz,
            };
            parse_trial_file(&path, &manifest.column_order, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cohort { trials })
}
