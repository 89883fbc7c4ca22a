//! Seeded synthetic signature datasets in the canonical file formats.
//!
//! Each subject gets a smooth base trajectory (three seeded sinusoids per
//! axis plus a pressure profile). Genuine samples add low-amplitude smooth
//! jitter; skilled forgeries additionally warp the time axis and rescale the
//! amplitudes, with a per-forgery severity draw so weak forgeries overlap the
//! genuine score band (the benchmark should sit strictly between 0% and 50%
//! EER). Random-forgery comparisons pair genuine signatures across subjects,
//! preferring subjects from the same capture scenario so every comparison
//! stays within one channel layout.
//!
//! Generation is a pure function of the spec: one sequential seeded stream
//! drives every draw, so a fixed spec always reproduces byte-identical files.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigbench::ingest::{
    Comparison, ComparisonList, DatasetManifest, InputTool, Label, ManifestEntry, RawSignature,
    Scenario, SignatureMeta, SignaturePoint,
};
use sigbench::kvfmt;
use sigbench::{Error, Result};

/// Sample period of generated signatures, in milliseconds (100 Hz).
const DT_MS: f64 = 10.0;
/// Lowest per-forgery severity; keeps some skilled forgeries near the
/// genuine band so the skilled EER stays above zero.
const MIN_SEVERITY: f64 = 0.05;
/// Time-warp amplitudes must stay below 1/pi for the warp to be monotone.
const MAX_WARP: f64 = 0.3;

/// Parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Number of subjects; even indices are office/stylus captures with
    /// pressure, odd indices mobile/finger captures without.
    pub subjects: usize,
    pub genuine_per_subject: usize,
    pub skilled_per_subject: usize,
    pub seed: u64,
    /// Relative amplitude of the smooth jitter added to genuine samples.
    pub genuine_jitter: f64,
    /// Relative amplitude of the forgery time warp and rescale; must exceed
    /// the genuine jitter.
    pub forgery_warp: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            subjects: 20,
            genuine_per_subject: 8,
            skilled_per_subject: 8,
            seed: 20210621,
            genuine_jitter: 0.01,
            forgery_warp: 0.15,
        }
    }
}

const KEY_WARP: &str = "forgery_warp";
const KEY_JITTER: &str = "genuine_jitter";
const KEY_GENUINE: &str = "genuine_per_subject";
const KEY_SEED: &str = "seed";
const KEY_SKILLED: &str = "skilled_per_subject";
const KEY_SUBJECTS: &str = "subjects";

const ALL_KEYS: [&str; 6] = [
    KEY_WARP,
    KEY_JITTER,
    KEY_GENUINE,
    KEY_SEED,
    KEY_SKILLED,
    KEY_SUBJECTS,
];

impl SynthSpec {
    /// Parses a spec file (flat `key = value`); missing keys take defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = kvfmt::parse_kv(text)?;
        for (key, _) in &pairs {
            if !ALL_KEYS.contains(&key.as_str()) {
                return Err(Error::Validation(format!("unknown spec key '{key}'")));
            }
        }
        let mut spec = SynthSpec::default();
        if let Some(v) = kvfmt::get(&pairs, KEY_SUBJECTS) {
            spec.subjects = parse_count(KEY_SUBJECTS, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_GENUINE) {
            spec.genuine_per_subject = parse_count(KEY_GENUINE, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_SKILLED) {
            spec.skilled_per_subject = parse_count(KEY_SKILLED, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_SEED) {
            spec.seed = v
                .parse::<u64>()
                .map_err(|_| Error::Validation(format!("{KEY_SEED}: expected an integer, found '{v}'")))?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_JITTER) {
            spec.genuine_jitter = parse_level(KEY_JITTER, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_WARP) {
            spec.forgery_warp = parse_level(KEY_WARP, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical form: every key, fixed order.
    pub fn serialize(&self) -> String {
        let pairs = vec![
            (KEY_WARP.to_string(), self.forgery_warp.to_string()),
            (KEY_JITTER.to_string(), self.genuine_jitter.to_string()),
            (KEY_GENUINE.to_string(), self.genuine_per_subject.to_string()),
            (KEY_SEED.to_string(), self.seed.to_string()),
            (KEY_SKILLED.to_string(), self.skilled_per_subject.to_string()),
            (KEY_SUBJECTS.to_string(), self.subjects.to_string()),
        ];
        kvfmt::write_kv(&pairs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(Error::Validation(format!(
                "{KEY_SUBJECTS} must be at least 2, found {}",
                self.subjects
            )));
        }
        if self.genuine_per_subject < 2 {
            return Err(Error::Validation(format!(
                "{KEY_GENUINE} must be at least 2, found {}",
                self.genuine_per_subject
            )));
        }
        if self.skilled_per_subject < 1 {
            return Err(Error::Validation(format!(
                "{KEY_SKILLED} must be at least 1, found {}",
                self.skilled_per_subject
            )));
        }
        if !(self.genuine_jitter.is_finite() && self.genuine_jitter >= 0.0) {
            return Err(Error::Validation(format!(
                "{KEY_JITTER} must be non-negative, found {}",
                self.genuine_jitter
            )));
        }
        if !(self.forgery_warp.is_finite() && self.forgery_warp > self.genuine_jitter) {
            return Err(Error::Validation(format!(
                "{KEY_WARP} ({}) must exceed {KEY_JITTER} ({})",
                self.forgery_warp, self.genuine_jitter
            )));
        }
        Ok(())
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Validation(format!("{key}: expected a non-negative integer, found '{value}'")))
}

fn parse_level(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Validation(format!("{key}: expected a finite number, found '{value}'")))
}

/// A sum of three sinusoids; evaluated analytically so warped time needs no
/// interpolation.
#[derive(Debug, Clone, Copy)]
struct Harmonics {
    parts: [(f64, f64, f64); 3], // (amplitude, frequency in Hz, phase)
}

impl Harmonics {
    fn eval(&self, t_ms: f64) -> f64 {
        let t = t_ms / 1000.0;
        self.parts
            .iter()
            .map(|&(amp, freq, phase)| amp * (2.0 * PI * freq * t + phase).sin())
            .sum()
    }

    /// Peak amplitude bound (sum of component amplitudes).
    fn amplitude(&self) -> f64 {
        self.parts.iter().map(|p| p.0.abs()).sum()
    }
}

fn draw_axis(rng: &mut ChaCha8Rng) -> Harmonics {
    let mut parts = [(0.0, 0.0, 0.0); 3];
    for part in &mut parts {
        *part = (
            rng.gen_range(10.0..40.0),
            rng.gen_range(0.4..2.2),
            rng.gen_range(0.0..2.0 * PI),
        );
    }
    Harmonics { parts }
}

/// Smooth noise: three sinusoids whose amplitudes scale with `level`.
fn draw_noise(rng: &mut ChaCha8Rng, level: f64) -> Harmonics {
    let mut parts = [(0.0, 0.0, 0.0); 3];
    for part in &mut parts {
        *part = (
            level * rng.gen_range(0.3..0.8),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.0..2.0 * PI),
        );
    }
    Harmonics { parts }
}

struct SubjectModel {
    scenario: Scenario,
    tool: InputTool,
    with_pressure: bool,
    samples: usize,
    x: Harmonics,
    y: Harmonics,
    pressure: Harmonics,
}

impl SubjectModel {
    fn duration(&self) -> f64 {
        (self.samples - 1) as f64 * DT_MS
    }
}

fn draw_subject(rng: &mut ChaCha8Rng, index: usize) -> SubjectModel {
    let office = index.is_multiple_of(2);
    SubjectModel {
        scenario: if office { Scenario::Office } else { Scenario::Mobile },
        tool: if office { InputTool::Stylus } else { InputTool::Finger },
        with_pressure: office,
        samples: rng.gen_range(140..=200),
        x: draw_axis(rng),
        y: draw_axis(rng),
        pressure: Harmonics {
            parts: [
                (0.35, rng.gen_range(0.3..0.8), rng.gen_range(0.0..2.0 * PI)),
                (0.0, 0.0, 0.0),
                (0.0, 0.0, 0.0),
            ],
        },
    }
}

/// Monotone time warp of the unit interval with `w(0) = 0`, `w(1) = 1`.
fn warp_unit(u: f64, a: f64) -> f64 {
    u + a * (PI * u).sin()
}

struct Deformation {
    warp: f64,
    scale_x: f64,
    scale_y: f64,
}

impl Deformation {
    fn identity() -> Self {
        Deformation {
            warp: 0.0,
            scale_x: 1.0,
            scale_y: 1.0,
        }
    }
}

fn render_signature(
    model: &SubjectModel,
    deform: &Deformation,
    noise_x: &Harmonics,
    noise_y: &Harmonics,
    noise_p: &Harmonics,
    id: String,
    label: Label,
) -> RawSignature<f64> {
    let duration = model.duration();
    let points = (0..model.samples)
        .map(|k| {
            let t = k as f64 * DT_MS;
            let u = if duration > 0.0 { t / duration } else { 0.0 };
            let warped = warp_unit(u, deform.warp) * duration;
            let x = deform.scale_x * model.x.eval(warped) + noise_x.eval(t);
            let y = deform.scale_y * model.y.eval(warped) + noise_y.eval(t);
            let p = model.with_pressure.then(|| {
                (0.55 + model.pressure.eval(warped) + noise_p.eval(t)).clamp(0.05, 1.0)
            });
            SignaturePoint {
                x,
                y,
                t,
                p,
                pen_down: None,
            }
        })
        .collect();
    let meta = SignatureMeta {
        input_tool: model.tool,
        scenario: model.scenario,
        label,
    };
    RawSignature::new(id, points, meta).expect("generated samples satisfy the format invariants")
}

fn fresh_id(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let id = format!("{:016x}", rng.gen::<u64>());
        if used.insert(id.clone()) {
            return id;
        }
    }
}

/// A generated dataset, ready to be written out or used in memory.
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub signatures: Vec<RawSignature<f64>>,
    /// Office-scenario comparisons.
    pub task1: ComparisonList,
    /// Mobile-scenario comparisons.
    pub task2: ComparisonList,
    /// Both scenarios, in subject order.
    pub task3: ComparisonList,
}

/// Relative path of a signature file inside the dataset directory.
pub fn signature_rel_path(id: &str) -> String {
    format!("sigs/{id}.sig")
}

/// Generates the dataset described by `spec`. Deterministic: the same spec
/// always yields the same signatures, manifest, and comparison lists.
pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut used_ids = BTreeSet::new();
    let mut manifest = DatasetManifest::new();
    let mut signatures = Vec::new();
    // Per subject: ids of genuine samples and of skilled forgeries.
    let mut genuine_ids: Vec<Vec<String>> = Vec::with_capacity(spec.subjects);
    let mut skilled_ids: Vec<Vec<String>> = Vec::with_capacity(spec.subjects);
    let mut scenarios = Vec::with_capacity(spec.subjects);

    for si in 0..spec.subjects {
        let model = draw_subject(&mut rng, si);
        scenarios.push(model.scenario);
        let jitter_x = spec.genuine_jitter * model.x.amplitude();
        let jitter_y = spec.genuine_jitter * model.y.amplitude();

        let mut subject_genuine = Vec::with_capacity(spec.genuine_per_subject);
        for _ in 0..spec.genuine_per_subject {
            let id = fresh_id(&mut rng, &mut used_ids);
            let noise_x = draw_noise(&mut rng, jitter_x);
            let noise_y = draw_noise(&mut rng, jitter_y);
            let noise_p = draw_noise(&mut rng, spec.genuine_jitter * 0.5);
            let sig = render_signature(
                &model,
                &Deformation::identity(),
                &noise_x,
                &noise_y,
                &noise_p,
                id.clone(),
                Label::Genuine,
            );
            manifest.insert(
                &id,
                ManifestEntry {
                    path: signature_rel_path(&id),
                    meta: sig.meta(),
                },
            )?;
            signatures.push(sig);
            subject_genuine.push(id);
        }
        genuine_ids.push(subject_genuine);

        let mut subject_skilled = Vec::with_capacity(spec.skilled_per_subject);
        for _ in 0..spec.skilled_per_subject {
            let id = fresh_id(&mut rng, &mut used_ids);
            let severity = rng.gen_range(MIN_SEVERITY..1.0);
            let deform = Deformation {
                warp: (severity * spec.forgery_warp * 0.8).min(MAX_WARP),
                scale_x: 1.0
                    + severity
                        * spec.forgery_warp
                        * rng.gen_range(0.5..1.0)
                        * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                scale_y: 1.0
                    + severity
                        * spec.forgery_warp
                        * rng.gen_range(0.5..1.0)
                        * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            };
            let noise_x = draw_noise(&mut rng, jitter_x);
            let noise_y = draw_noise(&mut rng, jitter_y);
            let noise_p = draw_noise(&mut rng, spec.genuine_jitter * 0.5);
            let sig = render_signature(
                &model,
                &deform,
                &noise_x,
                &noise_y,
                &noise_p,
                id.clone(),
                Label::SkilledForgery,
            );
            manifest.insert(
                &id,
                ManifestEntry {
                    path: signature_rel_path(&id),
                    meta: sig.meta(),
                },
            )?;
            signatures.push(sig);
            subject_skilled.push(id);
        }
        skilled_ids.push(subject_skilled);
    }

    // Comparison lists: reference = each subject's first genuine sample.
    let mut task1 = ComparisonList::default();
    let mut task2 = ComparisonList::default();
    let mut task3 = ComparisonList::default();
    for si in 0..spec.subjects {
        let reference = genuine_ids[si][0].clone();
        let mut entries = Vec::new();
        for probe in &genuine_ids[si][1..] {
            entries.push(Comparison {
                reference_id: reference.clone(),
                probe_id: probe.clone(),
                expected: Some(Label::Genuine),
            });
        }
        for probe in &skilled_ids[si] {
            entries.push(Comparison {
                reference_id: reference.clone(),
                probe_id: probe.clone(),
                expected: Some(Label::SkilledForgery),
            });
        }
        // Random forgeries: genuine samples of other subjects, preferring
        // subjects captured in the same scenario.
        let same_scenario: Vec<usize> = (0..spec.subjects)
            .filter(|&sj| sj != si && scenarios[sj] == scenarios[si])
            .collect();
        let pool: Vec<usize> = if same_scenario.is_empty() {
            (0..spec.subjects).filter(|&sj| sj != si).collect()
        } else {
            same_scenario
        };
        for _ in 0..spec.skilled_per_subject {
            let sj = pool[rng.gen_range(0..pool.len())];
            let gk = rng.gen_range(0..spec.genuine_per_subject);
            entries.push(Comparison {
                reference_id: reference.clone(),
                probe_id: genuine_ids[sj][gk].clone(),
                expected: Some(Label::RandomForgery),
            });
        }
        match scenarios[si] {
            Scenario::Office => task1.entries.extend(entries.iter().cloned()),
            Scenario::Mobile => task2.entries.extend(entries.iter().cloned()),
        }
        task3.entries.extend(entries);
    }

    Ok(SynthDataset {
        manifest,
        signatures,
        task1,
        task2,
        task3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            subjects: 4,
            genuine_per_subject: 3,
            skilled_per_subject: 2,
            seed: 99,
            genuine_jitter: 0.01,
            forgery_warp: 0.15,
        }
    }

    #[test]
    fn default_spec_round_trips() {
        let spec = SynthSpec::default();
        assert_eq!(SynthSpec::parse(&spec.serialize()).unwrap(), spec);
        let once = spec.serialize();
        let twice = SynthSpec::parse(&once).unwrap().serialize();
        assert_eq!(once, twice);
    }

    #[test]
    fn spec_validation_rejects_bad_fields() {
        assert!(SynthSpec::parse("subjects = 1\n").is_err());
        assert!(SynthSpec::parse("genuine_per_subject = 1\n").is_err());
        assert!(SynthSpec::parse("skilled_per_subject = 0\n").is_err());
        assert!(SynthSpec::parse("genuine_jitter = 0.5\n").is_err()); // >= warp
        assert!(SynthSpec::parse("mystery = 1\n").is_err());
        assert!(SynthSpec::parse("seed = -3\n").is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(a.signatures, b.signatures);
        assert_eq!(a.task1, b.task1);
        assert_eq!(a.task2, b.task2);
        assert_eq!(a.task3, b.task3);
    }

    #[test]
    fn different_seeds_differ() {
        let mut spec = small_spec();
        let a = generate(&spec).unwrap();
        spec.seed += 1;
        let b = generate(&spec).unwrap();
        assert_ne!(a.signatures[0].points, b.signatures[0].points);
    }

    #[test]
    fn zero_jitter_makes_genuine_samples_identical() {
        let mut spec = small_spec();
        spec.genuine_jitter = 0.0;
        let data = generate(&spec).unwrap();
        // The first two signatures belong to subject 0 and are both genuine.
        assert_eq!(data.signatures[0].label, Label::Genuine);
        assert_eq!(data.signatures[0].points, data.signatures[1].points);
    }

    #[test]
    fn counts_match_the_spec() {
        let spec = small_spec();
        let data = generate(&spec).unwrap();
        let total = spec.subjects * (spec.genuine_per_subject + spec.skilled_per_subject);
        assert_eq!(data.signatures.len(), total);
        assert_eq!(data.manifest.len(), total);
        let per_subject = (spec.genuine_per_subject - 1) + 2 * spec.skilled_per_subject;
        assert_eq!(data.task3.len(), spec.subjects * per_subject);
        assert_eq!(data.task1.len() + data.task2.len(), data.task3.len());
        assert!(!data.task1.is_empty());
        assert!(!data.task2.is_empty());
    }

    #[test]
    fn comparisons_resolve_and_labels_are_consistent() {
        let data = generate(&small_spec()).unwrap();
        for c in &data.task3.entries {
            let reference = data.manifest.get(&c.reference_id).expect("reference id");
            let probe = data.manifest.get(&c.probe_id).expect("probe id");
            assert_eq!(reference.meta.label, Label::Genuine);
            match c.expected.unwrap() {
                Label::Genuine => assert_eq!(probe.meta.label, Label::Genuine),
                Label::SkilledForgery => assert_eq!(probe.meta.label, Label::SkilledForgery),
                // Random forgeries present someone else's genuine signature.
                Label::RandomForgery => {
                    assert_eq!(probe.meta.label, Label::Genuine);
                    assert_ne!(c.probe_id, c.reference_id);
                    assert_eq!(probe.meta.scenario, reference.meta.scenario);
                }
                Label::Unknown => panic!("generated comparisons are always labeled"),
            }
        }
    }

    #[test]
    fn ids_are_seeded_hex_names() {
        let data = generate(&small_spec()).unwrap();
        for sig in &data.signatures {
            assert_eq!(sig.id.len(), 16);
            assert!(sig.id.chars().all(|c| c.is_ascii_hexdigit()));
        }
    }

    #[test]
    fn office_subjects_carry_pressure_and_mobile_do_not() {
        let data = generate(&small_spec()).unwrap();
        for sig in &data.signatures {
            match sig.scenario {
                Scenario::Office => {
                    assert!(sig.has_pressure());
                    assert_eq!(sig.input_tool, InputTool::Stylus);
                }
                Scenario::Mobile => {
                    assert!(!sig.has_pressure());
                    assert_eq!(sig.input_tool, InputTool::Finger);
                }
            }
        }
    }
}
