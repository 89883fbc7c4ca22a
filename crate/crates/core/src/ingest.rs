//! Canonical file formats: signature files, dataset manifests, comparison
//! lists, and score files.
//!
//! All formats are plain UTF-8 text with LF line endings and
//! locale-independent decimal points, so outputs diff cleanly across
//! platforms.
//!
//! Signature file layout:
//!
//! ```text
//! 3
//! 0 0 0 512
//! 5 2 10 600
//! 9 4 20 0
//! ```
//!
//! Line 1 is the sample count; each following line is `X Y T [P [U]]` where
//! `P` (pressure) and `U` (pen-up flag, 0 or 1) are optional but must be
//! present on either every row or none. Timestamps are shifted so the first
//! sample is at `t = 0`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Capture device used for a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputTool {
    Stylus,
    Finger,
}

/// Acquisition scenario the signature came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Office,
    Mobile,
}

/// Ground-truth class of a signature or of a comparison pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Genuine,
    SkilledForgery,
    RandomForgery,
    Unknown,
}

impl InputTool {
    pub fn as_str(self) -> &'static str {
        match self {
            InputTool::Stylus => "stylus",
            InputTool::Finger => "finger",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token {
            "stylus" => Some(InputTool::Stylus),
            "finger" => Some(InputTool::Finger),
            _ => None,
        }
    }
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Office => "office",
            Scenario::Mobile => "mobile",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token {
            "office" => Some(Scenario::Office),
            "mobile" => Some(Scenario::Mobile),
            _ => None,
        }
    }
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Genuine => "genuine",
            Label::SkilledForgery => "skilled_forgery",
            Label::RandomForgery => "random_forgery",
            Label::Unknown => "unknown",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token {
            "genuine" => Some(Label::Genuine),
            "skilled_forgery" => Some(Label::SkilledForgery),
            "random_forgery" => Some(Label::RandomForgery),
            "unknown" => Some(Label::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for InputTool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Metadata attached to a signature by the dataset manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureMeta {
    pub input_tool: InputTool,
    pub scenario: Scenario,
    pub label: Label,
}

impl Default for SignatureMeta {
    fn default() -> Self {
        SignatureMeta {
            input_tool: InputTool::Stylus,
            scenario: Scenario::Office,
            label: Label::Unknown,
        }
    }
}

/// One captured sample of a signature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignaturePoint<T> {
    pub x: T,
    pub y: T,
    /// Milliseconds since the first sample.
    pub t: T,
    /// Device pressure, present for stylus captures.
    pub p: Option<T>,
    /// Pen contact flag, when the device reports it.
    pub pen_down: Option<bool>,
}

/// A parsed signature with its manifest metadata.
///
/// Invariants enforced by [`RawSignature::new`]: at least two points, finite
/// coordinates, non-decreasing timestamps, non-negative pressure, and uniform
/// presence of the optional fields across all points.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignature<T> {
    pub id: String,
    pub points: Vec<SignaturePoint<T>>,
    pub input_tool: InputTool,
    pub scenario: Scenario,
    pub label: Label,
}

impl<T: Real> RawSignature<T> {
    pub fn new(id: impl Into<String>, points: Vec<SignaturePoint<T>>, meta: SignatureMeta) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooShort {
                len: points.len(),
                min: 2,
            });
        }
        let has_p = points[0].p.is_some();
        let has_pen = points[0].pen_down.is_some();
        // The canonical column layout is X Y T [P [U]]: a pen flag is only
        // representable alongside a pressure column.
        if has_pen && !has_p {
            return Err(Error::validation(
                "pen state requires a pressure channel".to_string(),
            ));
        }
        for (i, pt) in points.iter().enumerate() {
            if !(pt.x.is_finite() && pt.y.is_finite() && pt.t.is_finite()) {
                return Err(Error::validation(format!("non-finite value at sample {i}")));
            }
            if pt.p.is_some() != has_p || pt.pen_down.is_some() != has_pen {
                return Err(Error::validation(format!(
                    "optional fields must be present on every sample or none (sample {i})"
                )));
            }
            if let Some(p) = pt.p {
                if !p.is_finite() || p < T::zero() {
                    return Err(Error::validation(format!("invalid pressure at sample {i}")));
                }
            }
            if i > 0 && pt.t < points[i - 1].t {
                return Err(Error::validation(format!(
                    "timestamps must be non-decreasing (sample {i})"
                )));
            }
        }
        Ok(RawSignature {
            id: id.into(),
            points,
            input_tool: meta.input_tool,
            scenario: meta.scenario,
            label: meta.label,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_pressure(&self) -> bool {
        self.points.first().is_some_and(|pt| pt.p.is_some())
    }

    pub fn has_pen_state(&self) -> bool {
        self.points.first().is_some_and(|pt| pt.pen_down.is_some())
    }

    /// Total capture time in milliseconds.
    pub fn duration(&self) -> T {
        self.points[self.points.len() - 1].t - self.points[0].t
    }

    pub fn meta(&self) -> SignatureMeta {
        SignatureMeta {
            input_tool: self.input_tool,
            scenario: self.scenario,
            label: self.label,
        }
    }

    pub fn xs(&self) -> Vec<T> {
        self.points.iter().map(|pt| pt.x).collect()
    }

    pub fn ys(&self) -> Vec<T> {
        self.points.iter().map(|pt| pt.y).collect()
    }

    pub fn ts(&self) -> Vec<T> {
        self.points.iter().map(|pt| pt.t).collect()
    }

    /// Pressure channel, if the capture carries one.
    pub fn ps(&self) -> Option<Vec<T>> {
        if self.has_pressure() {
            Some(self.points.iter().map(|pt| pt.p.unwrap()).collect())
        } else {
            None
        }
    }
}

/// Parses a canonical signature file.
///
/// Timestamps are shifted so the first sample is at `t = 0`. Rows must carry
/// a uniform column count of 3 (`X Y T`), 4 (`+P`), or 5 (`+U`).
pub fn parse_signature<T: Real>(text: &str, id: &str, meta: SignatureMeta) -> Result<RawSignature<T>> {
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::format(1, "empty file"));
    }
    let count: usize = lines[0]
        .trim()
        .parse()
        .map_err(|_| Error::format(1, format!("invalid sample count '{}'", lines[0].trim())))?;
    if lines.len() - 1 != count {
        return Err(Error::format(
            1,
            format!("header declares {count} samples but file has {}", lines.len() - 1),
        ));
    }

    let mut columns = 0usize;
    let mut points: Vec<SignaturePoint<T>> = Vec::with_capacity(count);
    for (row, line) in lines[1..].iter().enumerate() {
        let lineno = row + 2;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if row == 0 {
            columns = fields.len();
            if !(3..=5).contains(&columns) {
                return Err(Error::format(
                    lineno,
                    format!("expected 3 to 5 columns, found {}", fields.len()),
                ));
            }
        } else if fields.len() != columns {
            return Err(Error::format(
                lineno,
                format!("expected {columns} columns, found {}", fields.len()),
            ));
        }
        let num = |i: usize| -> Result<T> {
            fields[i]
                .parse::<T>()
                .map_err(|_| Error::format(lineno, format!("invalid number '{}'", fields[i])))
        };
        let pen_down = if columns == 5 {
            match fields[4] {
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    return Err(Error::format(lineno, format!("invalid pen flag '{other}'")));
                }
            }
        } else {
            None
        };
        points.push(SignaturePoint {
            x: num(0)?,
            y: num(1)?,
            t: num(2)?,
            p: if columns >= 4 { Some(num(3)?) } else { None },
            pen_down,
        });
    }

    let t0 = points[0].t;
    for pt in &mut points {
        pt.t = pt.t - t0;
    }
    RawSignature::new(id, points, meta)
}

/// Renders a signature back to the canonical file format.
///
/// Numbers use the shortest round-trippable decimal form, so
/// `parse_signature` of the output reproduces the input field-exactly.
pub fn serialize_signature<T: Real>(sig: &RawSignature<T>) -> String {
    let mut out = String::new();
    out.push_str(&sig.points.len().to_string());
    out.push('\n');
    for pt in &sig.points {
        out.push_str(&format!("{} {} {}", pt.x, pt.y, pt.t));
        if let Some(p) = pt.p {
            out.push_str(&format!(" {p}"));
        }
        if let Some(pen) = pt.pen_down {
            out.push_str(if pen { " 1" } else { " 0" });
        }
        out.push('\n');
    }
    out
}

/// One line of a comparison list: score `probe_id` against `reference_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub reference_id: String,
    pub probe_id: String,
    /// Ground-truth class of the pair, when the list carries labels.
    pub expected: Option<Label>,
}

/// An ordered list of comparisons; order defines score-file line order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComparisonList {
    pub entries: Vec<Comparison>,
}

impl ComparisonList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a comparison list: one `reference_id probe_id [label]` per line.
pub fn parse_comparisons(text: &str) -> Result<ComparisonList> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::format(
                lineno,
                format!("expected 'reference_id probe_id [label]', found {} fields", fields.len()),
            ));
        }
        let expected = if fields.len() == 3 {
            Some(Label::parse(fields[2]).ok_or_else(|| {
                Error::validation(format!("line {lineno}: unknown label '{}'", fields[2]))
            })?)
        } else {
            None
        };
        entries.push(Comparison {
            reference_id: fields[0].to_string(),
            probe_id: fields[1].to_string(),
            expected,
        });
    }
    if entries.is_empty() {
        return Err(Error::validation("comparison list has no entries".to_string()));
    }
    Ok(ComparisonList { entries })
}

/// Renders a comparison list back to text.
pub fn serialize_comparisons(list: &ComparisonList) -> String {
    let mut out = String::new();
    for c in &list.entries {
        out.push_str(&c.reference_id);
        out.push(' ');
        out.push_str(&c.probe_id);
        if let Some(label) = c.expected {
            out.push(' ');
            out.push_str(label.as_str());
        }
        out.push('\n');
    }
    out
}

/// Benchmark task identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    One,
    Two,
    Three,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::One, Task::Two, Task::Three];

    pub fn number(self) -> u8 {
        match self {
            Task::One => 1,
            Task::Two => 2,
            Task::Three => 3,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.number())
    }
}

/// Location and metadata of one signature file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path to the signature file, relative to the manifest's directory.
    pub path: String,
    pub meta: SignatureMeta,
}

/// Index of a dataset: signature id to file location plus optional per-task
/// comparison lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: BTreeMap<String, ManifestEntry>,
    tasks: BTreeMap<Task, ComparisonList>,
}

impl DatasetManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, entry: ManifestEntry) -> Result<()> {
        let id = id.into();
        if self.entries.contains_key(&id) {
            return Err(Error::validation(format!("duplicate signature id '{id}'")));
        }
        self.entries.insert(id, entry);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ManifestEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Attaches a comparison list to a task. Every referenced id must exist.
    pub fn assign_task(&mut self, task: Task, list: ComparisonList) -> Result<()> {
        for (idx, c) in list.entries.iter().enumerate() {
            for id in [&c.reference_id, &c.probe_id] {
                if !self.entries.contains_key(id) {
                    return Err(Error::validation(format!(
                        "{task} entry {}: unknown signature id '{id}'",
                        idx + 1
                    )));
                }
            }
        }
        self.tasks.insert(task, list);
        Ok(())
    }

    pub fn task(&self, task: Task) -> Option<&ComparisonList> {
        self.tasks.get(&task)
    }
}

/// Parses a manifest: one `id path tool scenario label` per line.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let mut manifest = DatasetManifest::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::format(
                lineno,
                format!("expected 'id path tool scenario label', found {} fields", fields.len()),
            ));
        }
        let input_tool = InputTool::parse(fields[2])
            .ok_or_else(|| Error::validation(format!("line {lineno}: unknown tool '{}'", fields[2])))?;
        let scenario = Scenario::parse(fields[3])
            .ok_or_else(|| Error::validation(format!("line {lineno}: unknown scenario '{}'", fields[3])))?;
        let label = Label::parse(fields[4])
            .ok_or_else(|| Error::validation(format!("line {lineno}: unknown label '{}'", fields[4])))?;
        manifest
            .insert(
                fields[0],
                ManifestEntry {
                    path: fields[1].to_string(),
                    meta: SignatureMeta {
                        input_tool,
                        scenario,
                        label,
                    },
                },
            )
            .map_err(|e| match e {
                Error::Validation(msg) => Error::validation(format!("line {lineno}: {msg}")),
                other => other,
            })?;
    }
    if manifest.is_empty() {
        return Err(Error::validation("manifest has no entries".to_string()));
    }
    Ok(manifest)
}

/// Renders a manifest back to text, ordered by signature id.
pub fn serialize_manifest(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    for (id, entry) in manifest.iter() {
        out.push_str(&format!(
            "{id} {} {} {} {}\n",
            entry.path, entry.meta.input_tool, entry.meta.scenario, entry.meta.label
        ));
    }
    out
}

/// Renders one score per line with fixed 6-decimal formatting.
///
/// The fixed width makes score files bit-identical across platforms and
/// worker counts. Non-finite scores are rejected.
pub fn write_scores<T: Real>(scores: &[T]) -> Result<String> {
    let mut out = String::new();
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::validation(format!("non-finite score at index {i}")));
        }
        out.push_str(&format!("{s:.6}\n"));
    }
    Ok(out)
}

/// Parses a score file written by [`write_scores`].
pub fn parse_scores<T: Real>(text: &str) -> Result<Vec<T>> {
    let mut scores = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value: T = line
            .parse()
            .map_err(|_| Error::format(idx + 1, format!("invalid score '{line}'")))?;
        if !value.is_finite() {
            return Err(Error::validation(format!("non-finite score at line {}", idx + 1)));
        }
        scores.push(value);
    }
    Ok(scores)
}
