//! Subcommand implementations: `convert`, `compare`, `eval`, `rank`, `synth`.
//!
//! Each function takes resolved paths/flags, performs all file I/O, and
//! delegates the actual work to the library layers. Anything here can be
//! called directly from tests without spawning the binary.

use std::collections::BTreeMap;
use std::path::Path;

use sigbench::eval::{self, ImpostorFilter, RecordLabel, ScoreRecord};
use sigbench::ingest::{self, RawSignature, SignatureMeta, SignaturePoint};
use sigbench::scoring::to_similarity;

use crate::config::PipelineConfig;
use crate::pipeline;
use crate::synth::{self, SynthSpec};
use crate::{read_text, write_text, Error, Result};

/// 1-based numbers of the data-bearing lines (skipping blanks and `#`
/// comments) — the same lines the text parsers consume, in the same order.
fn data_line_numbers(text: &str) -> Vec<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, raw)| {
            let line = raw.trim();
            !line.is_empty() && !line.starts_with('#')
        })
        .map(|(i, _)| i + 1)
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => Ok(PipelineConfig::parse(&read_text(p)?)?),
        None => Ok(PipelineConfig::default()),
    }
}

/// Scores every comparison in `comparisons_path` with the configured
/// pipeline and writes one score per line to `out`. Output bytes depend only
/// on the inputs and config, never on the worker count.
pub fn cmd_compare(
    config: Option<&Path>,
    manifest_path: &Path,
    comparisons_path: &Path,
    out: &Path,
    workers: usize,
) -> Result<()> {
    let cfg = load_config(config)?;
    let manifest = ingest::parse_manifest(&read_text(manifest_path)?)?;
    let comp_text = read_text(comparisons_path)?;
    let comparisons = ingest::parse_comparisons(&comp_text)?;
    let lines = data_line_numbers(&comp_text);
    debug_assert_eq!(lines.len(), comparisons.len());

    for (k, c) in comparisons.entries.iter().enumerate() {
        for id in [&c.reference_id, &c.probe_id] {
            if manifest.get(id).is_none() {
                return Err(Error::invalid(format!(
                    "{}: line {}: unknown signature id '{id}'",
                    comparisons_path.display(),
                    lines[k]
                )));
            }
        }
    }

    // Load each referenced signature once; paths are relative to the
    // manifest's directory.
    let base_dir = manifest_path.parent().unwrap_or_else(|| Path::new(""));
    let mut raw: BTreeMap<String, RawSignature<f64>> = BTreeMap::new();
    for c in &comparisons.entries {
        for id in [&c.reference_id, &c.probe_id] {
            if raw.contains_key(id) {
                continue;
            }
            let entry = manifest.get(id).expect("ids were resolved above");
            let path = base_dir.join(&entry.path);
            let sig = ingest::parse_signature::<f64>(&read_text(&path)?, id, entry.meta)
                .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
            raw.insert(id.clone(), sig);
        }
    }

    let pool = pipeline::make_pool(workers)?;
    let prepared = pipeline::prepare_corpus(&cfg, &raw, &pool)?;
    let pairs: Vec<(String, String)> = comparisons
        .entries
        .iter()
        .map(|c| (c.reference_id.clone(), c.probe_id.clone()))
        .collect();
    let scores = pipeline::score_pairs(&cfg, &prepared, &pairs, &pool)?;
    write_text(out, &ingest::write_scores(&scores)?)
}

/// Evaluates a score file against labeled ground-truth comparisons, writing
/// `report.txt` plus one DET CSV per impostor filter into `out_dir`. The
/// score orientation comes from `--config` (default: the baseline pipeline's
/// lower-is-genuine convention).
pub fn cmd_eval(
    scores_path: &Path,
    comparisons_path: &Path,
    out_dir: &Path,
    config: Option<&Path>,
) -> Result<()> {
    let orientation = load_config(config)?.orientation;
    let scores: Vec<f64> = ingest::parse_scores(&read_text(scores_path)?)?;
    let comp_text = read_text(comparisons_path)?;
    let comparisons = ingest::parse_comparisons(&comp_text)?;
    if scores.len() != comparisons.len() {
        return Err(Error::invalid(format!(
            "count mismatch: {} scores in {} but {} comparisons in {}",
            scores.len(),
            scores_path.display(),
            comparisons.len(),
            comparisons_path.display()
        )));
    }
    let lines = data_line_numbers(&comp_text);
    let similarities = to_similarity(&scores, orientation);
    let mut records = Vec::with_capacity(scores.len());
    for (k, c) in comparisons.entries.iter().enumerate() {
        let label = c.expected.ok_or_else(|| {
            Error::invalid(format!(
                "{}: line {}: comparison carries no ground-truth label",
                comparisons_path.display(),
                lines[k]
            ))
        })?;
        let label = RecordLabel::try_from(label)?;
        records.push(ScoreRecord::new(similarities[k], label)?);
    }
    let report = eval::evaluate(&records)?;
    write_text(&out_dir.join("report.txt"), &eval::render_report(&report))?;
    write_text(
        &out_dir.join("det_all.csv"),
        &eval::det_csv(&report.det_points),
    )?;
    if report.count_skilled_forgery > 0 {
        let points = eval::far_frr_curve(&records, ImpostorFilter::SkilledOnly)?;
        write_text(&out_dir.join("det_skilled.csv"), &eval::det_csv(&points))?;
    }
    if report.count_random_forgery > 0 {
        let points = eval::far_frr_curve(&records, ImpostorFilter::RandomOnly)?;
        write_text(&out_dir.join("det_random.csv"), &eval::det_csv(&points))?;
    }
    Ok(())
}

/// Ranks team reports. `reports_dir` holds one subdirectory per task, each
/// containing `<team>.txt` report files (as written by `eval`); the ranking
/// is computed on each report's overall EER and written as markdown.
pub fn cmd_rank(reports_dir: &Path, out: &Path) -> Result<()> {
    let mut tasks: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let entries = std::fs::read_dir(reports_dir).map_err(|e| Error::io(reports_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(reports_dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let task_name = entry.file_name().to_string_lossy().into_owned();
        let mut teams = BTreeMap::new();
        let reports = std::fs::read_dir(&path).map_err(|e| Error::io(&path, e))?;
        for report in reports {
            let report = report.map_err(|e| Error::io(&path, e))?;
            let rpath = report.path();
            if rpath.extension().and_then(|e| e.to_str()) != Some("txt") || !rpath.is_file() {
                continue;
            }
            let team = rpath
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::invalid(format!("{}: no file stem", rpath.display())))?;
            let parsed = eval::parse_report::<f64>(&read_text(&rpath)?)
                .map_err(|e| Error::invalid(format!("{}: {e}", rpath.display())))?;
            teams.insert(team, parsed.eer_overall);
        }
        if !teams.is_empty() {
            tasks.insert(task_name, teams);
        }
    }
    if tasks.is_empty() {
        return Err(Error::invalid(format!(
            "no task directories with team reports found in {}",
            reports_dir.display()
        )));
    }
    let table = eval::rank_teams(&tasks)?;
    write_text(out, &eval::render_ranking(&table))
}

/// Generates a synthetic dataset into `out_dir`: `manifest.txt`,
/// `sigs/<id>.sig`, and one labeled comparison list per task.
pub fn cmd_synth(spec_path: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let mut spec = match spec_path {
        Some(p) => SynthSpec::parse(&read_text(p)?)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let data = synth::generate(&spec)?;
    for sig in &data.signatures {
        write_text(
            &out_dir.join(synth::signature_rel_path(&sig.id)),
            &ingest::serialize_signature(sig),
        )?;
    }
    write_text(
        &out_dir.join("manifest.txt"),
        &ingest::serialize_manifest(&data.manifest),
    )?;
    for (name, list) in [
        ("comparisons_task1.txt", &data.task1),
        ("comparisons_task2.txt", &data.task2),
        ("comparisons_task3.txt", &data.task3),
    ] {
        write_text(&out_dir.join(name), &ingest::serialize_comparisons(list))?;
    }
    Ok(())
}

/// Column roles accepted by `convert`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    X,
    Y,
    T,
    P,
    Pen,
    Skip,
}

fn parse_columns(spec: &str) -> Result<Vec<Column>> {
    let mut cols = Vec::new();
    for token in spec.split(',').map(str::trim) {
        cols.push(match token {
            "x" => Column::X,
            "y" => Column::Y,
            "t" => Column::T,
            "p" => Column::P,
            "pen" => Column::Pen,
            "skip" => Column::Skip,
            other => {
                return Err(Error::invalid(format!(
                    "unknown column '{other}' (expected x, y, t, p, pen, or skip)"
                )))
            }
        });
    }
    for (required, name) in [(Column::X, "x"), (Column::Y, "y"), (Column::T, "t")] {
        if cols.iter().filter(|&&c| c == required).count() != 1 {
            return Err(Error::invalid(format!(
                "column mapping must name '{name}' exactly once"
            )));
        }
    }
    for (optional, name) in [(Column::P, "p"), (Column::Pen, "pen")] {
        if cols.iter().filter(|&&c| c == optional).count() > 1 {
            return Err(Error::invalid(format!(
                "column mapping names '{name}' more than once"
            )));
        }
    }
    if cols.contains(&Column::Pen) && !cols.contains(&Column::P) {
        return Err(Error::invalid(
            "a pen column requires a pressure column".to_string(),
        ));
    }
    Ok(cols)
}

/// Converts an external whitespace-separated export into the canonical
/// signature format. `columns` maps each input column to a role; `t_scale`
/// rescales timestamps to milliseconds; the time origin is shifted to the
/// first sample. With `count_header`, the first data line must declare the
/// row count.
pub fn cmd_convert(
    input: &Path,
    out: &Path,
    columns: &str,
    count_header: bool,
    id: Option<&str>,
    t_scale: f64,
) -> Result<()> {
    if !(t_scale.is_finite() && t_scale > 0.0) {
        return Err(Error::invalid(format!(
            "t-scale must be positive, found {t_scale}"
        )));
    }
    let cols = parse_columns(columns)?;
    let text = read_text(input)?;
    let id = match id {
        Some(given) => given.to_string(),
        None => input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "converted".to_string()),
    };

    let mut rows = text.lines().enumerate().filter(|(_, raw)| {
        let line = raw.trim();
        !line.is_empty() && !line.starts_with('#')
    });
    let declared = if count_header {
        let (idx, line) = rows
            .next()
            .ok_or_else(|| Error::invalid(format!("{}: empty input", input.display())))?;
        Some(line.trim().parse::<usize>().map_err(|_| {
            Error::invalid(format!(
                "{}: line {}: expected a sample count, found '{}'",
                input.display(),
                idx + 1,
                line.trim()
            ))
        })?)
    } else {
        None
    };

    let mut points = Vec::new();
    for (idx, raw) in rows {
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != cols.len() {
            return Err(Error::invalid(format!(
                "{}: line {}: expected {} fields, found {}",
                input.display(),
                idx + 1,
                cols.len(),
                fields.len()
            )));
        }
        let mut point = SignaturePoint {
            x: 0.0,
            y: 0.0,
            t: 0.0,
            p: None,
            pen_down: None,
        };
        for (col, field) in cols.iter().zip(&fields) {
            if *col == Column::Skip {
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::invalid(format!(
                    "{}: line {}: invalid number '{field}'",
                    input.display(),
                    idx + 1
                ))
            })?;
            match col {
                Column::X => point.x = value,
                Column::Y => point.y = value,
                Column::T => point.t = value,
                Column::P => point.p = Some(value),
                Column::Pen => point.pen_down = Some(value != 0.0),
                Column::Skip => unreachable!(),
            }
        }
        points.push(point);
    }
    if let Some(n) = declared {
        if n != points.len() {
            return Err(Error::invalid(format!(
                "{}: header declares {n} samples but {} rows follow",
                input.display(),
                points.len()
            )));
        }
    }
    // Normalize the time axis: origin at the first sample, milliseconds.
    let t0 = points.first().map(|p| p.t).unwrap_or(0.0);
    for p in &mut points {
        p.t = (p.t - t0) * t_scale;
    }
    let sig = RawSignature::new(id, points, SignatureMeta::default())
        .map_err(|e| Error::invalid(format!("{}: {e}", input.display())))?;
    write_text(out, &ingest::serialize_signature(&sig))
}
