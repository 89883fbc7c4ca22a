//! Pipeline configuration: which preprocessing steps, feature extractors,
//! matcher, and score mapping a `compare` run uses.
//!
//! The on-disk form is flat `key = value` text with dotted section keys
//! (`matcher.gamma = 0.1`). Missing keys fall back to the baseline-DTW
//! defaults; unknown keys are rejected so typos surface early. Parsing and
//! re-serializing is idempotent: [`PipelineConfig::serialize`] always emits
//! every key in a fixed order with round-trip-exact float formatting.

use sigbench::alignment::Metric;
use sigbench::kvfmt;
use sigbench::preprocess::{PressurePolicy, ScaleTarget, DEFAULT_RESAMPLE_HZ};
use sigbench::scoring::ScoreOrientation;
use sigbench::{Error, Result};

/// One preprocessing step; the config lists them in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessStep {
    /// Resample to a uniform rate (`preprocess.resample_hz`).
    Resample,
    /// Remove pen-up samples (zero pressure).
    DropZeroPressure,
    /// Scale-preserving normalization of x/y into a target box.
    ScaleCenter,
}

impl PreprocessStep {
    pub fn as_str(self) -> &'static str {
        match self {
            PreprocessStep::Resample => "resample",
            PreprocessStep::DropZeroPressure => "drop_zero_pressure",
            PreprocessStep::ScaleCenter => "scale_center",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "resample" => Ok(PreprocessStep::Resample),
            "drop_zero_pressure" => Ok(PreprocessStep::DropZeroPressure),
            "scale_center" => Ok(PreprocessStep::ScaleCenter),
            other => Err(Error::Validation(format!(
                "unknown preprocess step '{other}' (expected resample, drop_zero_pressure, or scale_center)"
            ))),
        }
    }
}

/// Feature extractor selector. Each listed extractor becomes one branch of
/// the pipeline; branch distances are fused with `score.weights`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    /// Position, velocity, and acceleration channels.
    Baseline,
    /// The 12-channel kinematic set (velocities, angle, curvature, ...).
    Dlvc12,
    /// The 9-channel set built around speed and stroke-angle dynamics.
    Sig9,
}

impl ExtractorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtractorKind::Baseline => "baseline",
            ExtractorKind::Dlvc12 => "dlvc12",
            ExtractorKind::Sig9 => "sig9",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "baseline" => Ok(ExtractorKind::Baseline),
            "dlvc12" => Ok(ExtractorKind::Dlvc12),
            "sig9" => Ok(ExtractorKind::Sig9),
            other => Err(Error::Validation(format!(
                "unknown extractor '{other}' (expected baseline, dlvc12, or sig9)"
            ))),
        }
    }
}

/// Sequence matcher selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatcherKind {
    Dtw,
    SoftDtw,
}

impl MatcherKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatcherKind::Dtw => "dtw",
            MatcherKind::SoftDtw => "softdtw",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "dtw" => Ok(MatcherKind::Dtw),
            "softdtw" => Ok(MatcherKind::SoftDtw),
            other => Err(Error::Validation(format!(
                "unknown matcher '{other}' (expected dtw or softdtw)"
            ))),
        }
    }
}

/// Optional distance-to-score mapping applied after fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdScorer {
    /// Pass the fused value through unchanged.
    None,
    /// Local calibration: linear in the distance, 1 at `g_th`, 0 at `s * f_th`.
    SigstatLocal { g_th: f64, f_th: f64, s: f64 },
    /// Global calibration: clamped linear map with 0 at `d_g_min`, 1 at `d_f_med`.
    SigstatGlobal { d_g_min: f64, d_f_med: f64 },
}

/// Full description of a scoring pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Preprocessing steps in application order; may be empty.
    pub preprocess_steps: Vec<PreprocessStep>,
    /// Target rate for the resample step, in Hz.
    pub resample_hz: f64,
    /// Target box for the scale_center step.
    pub scale_target: ScaleTarget,
    /// How channel normalization treats the pressure channel.
    pub pressure_policy: PressurePolicy,
    /// Fusion branches; one weight per entry.
    pub extractors: Vec<ExtractorKind>,
    /// Z-normalize every extracted channel before matching.
    pub znorm: bool,
    pub matcher: MatcherKind,
    pub metric: Metric,
    /// Soft-min temperature; used only by the softdtw matcher.
    pub gamma: f64,
    /// Normalize the matcher output by alignment length (path length for
    /// dtw, `len_a + len_b` for softdtw).
    pub normalize: bool,
    /// Fusion weights, one per extractor branch.
    pub weights: Vec<f64>,
    /// Optional robust normalization `(mu, sigma)` applied to the fused value.
    pub tanh: Option<(f64, f64)>,
    pub threshold: ThresholdScorer,
    /// Which direction of the final score stream means "genuine".
    pub orientation: ScoreOrientation,
}

impl Default for PipelineConfig {
    /// The baseline pipeline: resample to 100 Hz, position/velocity/
    /// acceleration channels, Euclidean DTW normalized by path length.
    fn default() -> Self {
        PipelineConfig {
            preprocess_steps: vec![PreprocessStep::Resample],
            resample_hz: DEFAULT_RESAMPLE_HZ,
            scale_target: ScaleTarget::Unit01,
            pressure_policy: PressurePolicy::ConstantOne,
            extractors: vec![ExtractorKind::Baseline],
            znorm: false,
            matcher: MatcherKind::Dtw,
            metric: Metric::Euclidean,
            gamma: 1.0,
            normalize: true,
            weights: vec![1.0],
            tanh: None,
            threshold: ThresholdScorer::None,
            orientation: ScoreOrientation::LowerIsGenuine,
        }
    }
}

/// Comma-separated list; the token `none` denotes the empty list.
fn join_list<I: Iterator<Item = String>>(items: I) -> String {
    let joined: Vec<String> = items.collect();
    if joined.is_empty() {
        "none".to_string()
    } else {
        joined.join(",")
    }
}

fn split_list(value: &str) -> Vec<&str> {
    if value == "none" || value.is_empty() {
        Vec::new()
    } else {
        value.split(',').map(str::trim).collect()
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Validation(format!("{key}: expected a finite number, found '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(Error::Validation(format!(
            "{key}: expected true or false, found '{other}'"
        ))),
    }
}

const KEY_EXTRACTORS: &str = "features.extractors";
const KEY_ZNORM: &str = "features.znorm";
const KEY_GAMMA: &str = "matcher.gamma";
const KEY_MATCHER: &str = "matcher.kind";
const KEY_METRIC: &str = "matcher.metric";
const KEY_NORMALIZE: &str = "matcher.normalize";
const KEY_PRESSURE: &str = "preprocess.pressure_policy";
const KEY_RESAMPLE_HZ: &str = "preprocess.resample_hz";
const KEY_SCALE_TARGET: &str = "preprocess.scale_target";
const KEY_STEPS: &str = "preprocess.steps";
const KEY_ORIENTATION: &str = "score.orientation";
const KEY_TANH: &str = "score.tanh";
const KEY_THRESHOLD: &str = "score.threshold";
const KEY_WEIGHTS: &str = "score.weights";

const ALL_KEYS: [&str; 14] = [
    KEY_EXTRACTORS,
    KEY_ZNORM,
    KEY_GAMMA,
    KEY_MATCHER,
    KEY_METRIC,
    KEY_NORMALIZE,
    KEY_PRESSURE,
    KEY_RESAMPLE_HZ,
    KEY_SCALE_TARGET,
    KEY_STEPS,
    KEY_ORIENTATION,
    KEY_TANH,
    KEY_THRESHOLD,
    KEY_WEIGHTS,
];

impl PipelineConfig {
    /// Parses a config file. Missing keys take their defaults; unknown keys
    /// and invalid values are validation errors.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = kvfmt::parse_kv(text)?;
        for (key, _) in &pairs {
            if !ALL_KEYS.contains(&key.as_str()) {
                return Err(Error::Validation(format!("unknown config key '{key}'")));
            }
        }
        let mut cfg = PipelineConfig::default();
        let mut weights_given = false;

        if let Some(v) = kvfmt::get(&pairs, KEY_STEPS) {
            cfg.preprocess_steps = split_list(v)
                .into_iter()
                .map(PreprocessStep::parse)
                .collect::<Result<_>>()?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_RESAMPLE_HZ) {
            cfg.resample_hz = parse_f64(KEY_RESAMPLE_HZ, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_SCALE_TARGET) {
            cfg.scale_target = ScaleTarget::parse(v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_PRESSURE) {
            cfg.pressure_policy = PressurePolicy::parse(v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_EXTRACTORS) {
            cfg.extractors = split_list(v)
                .into_iter()
                .map(ExtractorKind::parse)
                .collect::<Result<_>>()?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_ZNORM) {
            cfg.znorm = parse_bool(KEY_ZNORM, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_MATCHER) {
            cfg.matcher = MatcherKind::parse(v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_METRIC) {
            cfg.metric = Metric::parse(v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_GAMMA) {
            cfg.gamma = parse_f64(KEY_GAMMA, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_NORMALIZE) {
            cfg.normalize = parse_bool(KEY_NORMALIZE, v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_WEIGHTS) {
            cfg.weights = split_list(v)
                .into_iter()
                .map(|t| parse_f64(KEY_WEIGHTS, t))
                .collect::<Result<_>>()?;
            weights_given = true;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_TANH) {
            cfg.tanh = if v == "none" {
                None
            } else {
                let parts = split_list(v);
                if parts.len() != 2 {
                    return Err(Error::Validation(format!(
                        "{KEY_TANH}: expected 'none' or 'mu,sigma', found '{v}'"
                    )));
                }
                Some((parse_f64(KEY_TANH, parts[0])?, parse_f64(KEY_TANH, parts[1])?))
            };
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_THRESHOLD) {
            cfg.threshold = parse_threshold(v)?;
        }
        if let Some(v) = kvfmt::get(&pairs, KEY_ORIENTATION) {
            cfg.orientation = ScoreOrientation::parse(v)?;
        }

        // A config that names extractors but no weights gets uniform weights.
        if !weights_given {
            cfg.weights = vec![1.0; cfg.extractors.len()];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the canonical form: every key, fixed order, `{}` floats
    /// (shortest round-trip representation).
    pub fn serialize(&self) -> String {
        let pairs: Vec<(String, String)> = vec![
            (
                KEY_EXTRACTORS.to_string(),
                join_list(self.extractors.iter().map(|e| e.as_str().to_string())),
            ),
            (KEY_ZNORM.to_string(), self.znorm.to_string()),
            (KEY_GAMMA.to_string(), self.gamma.to_string()),
            (KEY_MATCHER.to_string(), self.matcher.as_str().to_string()),
            (KEY_METRIC.to_string(), self.metric.as_str().to_string()),
            (KEY_NORMALIZE.to_string(), self.normalize.to_string()),
            (
                KEY_PRESSURE.to_string(),
                self.pressure_policy.as_str().to_string(),
            ),
            (KEY_RESAMPLE_HZ.to_string(), self.resample_hz.to_string()),
            (
                KEY_SCALE_TARGET.to_string(),
                self.scale_target.as_str().to_string(),
            ),
            (
                KEY_STEPS.to_string(),
                join_list(self.preprocess_steps.iter().map(|s| s.as_str().to_string())),
            ),
            (
                KEY_ORIENTATION.to_string(),
                self.orientation.as_str().to_string(),
            ),
            (
                KEY_TANH.to_string(),
                match self.tanh {
                    None => "none".to_string(),
                    Some((mu, sigma)) => format!("{mu},{sigma}"),
                },
            ),
            (
                KEY_THRESHOLD.to_string(),
                match self.threshold {
                    ThresholdScorer::None => "none".to_string(),
                    ThresholdScorer::SigstatLocal { g_th, f_th, s } => {
                        format!("sigstat_local,{g_th},{f_th},{s}")
                    }
                    ThresholdScorer::SigstatGlobal { d_g_min, d_f_med } => {
                        format!("sigstat_global,{d_g_min},{d_f_med}")
                    }
                },
            ),
            (
                KEY_WEIGHTS.to_string(),
                join_list(self.weights.iter().map(|w| w.to_string())),
            ),
        ];
        kvfmt::write_kv(&pairs)
    }

    /// Checks cross-field invariants: the referenced names exist (enforced by
    /// the enums), parameters satisfy the matcher/scorer preconditions, and
    /// one weight is given per extractor branch.
    pub fn validate(&self) -> Result<()> {
        if self.extractors.is_empty() {
            return Err(Error::Validation(
                "at least one feature extractor is required".to_string(),
            ));
        }
        for (i, e) in self.extractors.iter().enumerate() {
            if self.extractors[..i].contains(e) {
                return Err(Error::Validation(format!(
                    "duplicate extractor '{}'",
                    e.as_str()
                )));
            }
        }
        for (i, s) in self.preprocess_steps.iter().enumerate() {
            if self.preprocess_steps[..i].contains(s) {
                return Err(Error::Validation(format!(
                    "duplicate preprocess step '{}'",
                    s.as_str()
                )));
            }
        }
        if !(self.resample_hz.is_finite() && self.resample_hz > 0.0) {
            return Err(Error::Validation(format!(
                "{KEY_RESAMPLE_HZ} must be positive, found {}",
                self.resample_hz
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Validation(format!(
                "{KEY_GAMMA} must be positive, found {}",
                self.gamma
            )));
        }
        if self.weights.len() != self.extractors.len() {
            return Err(Error::Validation(format!(
                "{} weights for {} extractor branches",
                self.weights.len(),
                self.extractors.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(
                "fusion weights must be finite and non-negative".to_string(),
            ));
        }
        if self.weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Validation(
                "fusion weights must not all be zero".to_string(),
            ));
        }
        if let Some((mu, sigma)) = self.tanh {
            if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
                return Err(Error::Validation(format!(
                    "{KEY_TANH}: sigma must be positive, found mu={mu} sigma={sigma}"
                )));
            }
        }
        match self.threshold {
            ThresholdScorer::None => {}
            ThresholdScorer::SigstatLocal { g_th, f_th, s } => {
                if ![g_th, f_th, s].iter().all(|v| v.is_finite()) || s * f_th - g_th == 0.0 {
                    return Err(Error::Validation(format!(
                        "{KEY_THRESHOLD}: sigstat_local needs finite parameters with s*f_th != g_th"
                    )));
                }
            }
            ThresholdScorer::SigstatGlobal { d_g_min, d_f_med } => {
                if !(d_g_min.is_finite() && d_f_med.is_finite() && d_f_med > d_g_min) {
                    return Err(Error::Validation(format!(
                        "{KEY_THRESHOLD}: sigstat_global needs d_f_med > d_g_min"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_threshold(value: &str) -> Result<ThresholdScorer> {
    if value == "none" {
        return Ok(ThresholdScorer::None);
    }
    let parts = split_list(value);
    match parts.first().copied() {
        Some("sigstat_local") if parts.len() == 4 => Ok(ThresholdScorer::SigstatLocal {
            g_th: parse_f64(KEY_THRESHOLD, parts[1])?,
            f_th: parse_f64(KEY_THRESHOLD, parts[2])?,
            s: parse_f64(KEY_THRESHOLD, parts[3])?,
        }),
        Some("sigstat_global") if parts.len() == 3 => Ok(ThresholdScorer::SigstatGlobal {
            d_g_min: parse_f64(KEY_THRESHOLD, parts[1])?,
            d_f_med: parse_f64(KEY_THRESHOLD, parts[2])?,
        }),
        _ => Err(Error::Validation(format!(
            "{KEY_THRESHOLD}: expected 'none', 'sigstat_local,g_th,f_th,s', or 'sigstat_global,d_g_min,d_f_med', found '{value}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_the_default_pipeline() {
        let cfg = PipelineConfig::parse("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.matcher, MatcherKind::Dtw);
        assert_eq!(cfg.metric, Metric::Euclidean);
        assert_eq!(cfg.extractors, vec![ExtractorKind::Baseline]);
        assert_eq!(cfg.orientation, ScoreOrientation::LowerIsGenuine);
    }

    #[test]
    fn parse_then_serialize_is_idempotent() {
        let text = "matcher.kind = softdtw\nmatcher.gamma = 0.1\nfeatures.extractors = dlvc12,sig9\nscore.weights = 0.25,0.75\n";
        let once = PipelineConfig::parse(text).unwrap().serialize();
        let twice = PipelineConfig::parse(&once).unwrap().serialize();
        assert_eq!(once, twice);
    }

    #[test]
    fn default_serialization_round_trips_exactly() {
        let cfg = PipelineConfig::default();
        let parsed = PipelineConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, parsed);
    }

    #[test]
    fn every_field_round_trips() {
        let cfg = PipelineConfig {
            preprocess_steps: vec![
                PreprocessStep::Resample,
                PreprocessStep::DropZeroPressure,
                PreprocessStep::ScaleCenter,
            ],
            resample_hz: 87.5,
            scale_target: ScaleTarget::Sym11,
            pressure_policy: PressurePolicy::AsIs,
            extractors: vec![ExtractorKind::Dlvc12, ExtractorKind::Sig9],
            znorm: true,
            matcher: MatcherKind::SoftDtw,
            metric: Metric::SqEuclidean,
            gamma: 0.015625,
            normalize: false,
            weights: vec![0.3, 0.7],
            tanh: Some((12.5, 3.25)),
            threshold: ThresholdScorer::SigstatGlobal {
                d_g_min: 1.5,
                d_f_med: 9.75,
            },
            orientation: ScoreOrientation::HigherIsGenuine,
        };
        let parsed = PipelineConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, parsed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::parse("matcher.speed = fast\n").unwrap_err();
        assert!(err.to_string().contains("unknown config key"));
    }

    #[test]
    fn unknown_tokens_are_rejected() {
        assert!(PipelineConfig::parse("matcher.kind = warp\n").is_err());
        assert!(PipelineConfig::parse("features.extractors = mystery\n").is_err());
        assert!(PipelineConfig::parse("preprocess.steps = smooth\n").is_err());
        assert!(PipelineConfig::parse("score.threshold = sigstat_local,1\n").is_err());
    }

    #[test]
    fn weight_count_must_match_branch_count() {
        let err =
            PipelineConfig::parse("features.extractors = baseline,sig9\nscore.weights = 1\n")
                .unwrap_err();
        assert!(err.to_string().contains("weights"));
    }

    #[test]
    fn omitted_weights_default_to_uniform_per_branch() {
        let cfg = PipelineConfig::parse("features.extractors = baseline,dlvc12\n").unwrap();
        assert_eq!(cfg.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn empty_step_list_uses_the_none_token() {
        let cfg = PipelineConfig::parse("preprocess.steps = none\n").unwrap();
        assert!(cfg.preprocess_steps.is_empty());
        let round = PipelineConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, round);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(PipelineConfig::parse("matcher.gamma = 0\n").is_err());
        assert!(PipelineConfig::parse("preprocess.resample_hz = -5\n").is_err());
        assert!(PipelineConfig::parse("score.weights = 0\n").is_err());
        assert!(PipelineConfig::parse("score.tanh = 1,0\n").is_err());
        assert!(PipelineConfig::parse("score.threshold = sigstat_global,5,5\n").is_err());
        assert!(PipelineConfig::parse("features.extractors = none\n").is_err());
        assert!(PipelineConfig::parse("features.extractors = baseline,baseline\n").is_err());
    }
}
