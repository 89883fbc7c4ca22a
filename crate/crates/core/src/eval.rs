//! Verification-grade evaluation: FAR/FRR sweeps, equal error rate with the
//! fixed interpolation rule, per-forgery-type breakdown, and the points-based
//! team ranking with its rendered outputs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::kvfmt;
use crate::scalar::{from_count, real, Real};

/// Class of a scored comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLabel {
    Genuine,
    SkilledForgery,
    RandomForgery,
}

impl TryFrom<Label> for RecordLabel {
    type Error = Error;

    fn try_from(label: Label) -> Result<Self> {
        match label {
            Label::Genuine => Ok(RecordLabel::Genuine),
            Label::SkilledForgery => Ok(RecordLabel::SkilledForgery),
            Label::RandomForgery => Ok(RecordLabel::RandomForgery),
            Label::Unknown => Err(Error::validation(
                "comparison lacks a ground-truth label".to_string(),
            )),
        }
    }
}

/// One labeled similarity score (higher means more genuine-like).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord<T> {
    pub score: T,
    pub label: RecordLabel,
}

impl<T: Real> ScoreRecord<T> {
    pub fn new(score: T, label: RecordLabel) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::validation("score must be finite".to_string()));
        }
        Ok(ScoreRecord { score, label })
    }
}

/// Which impostor class an evaluation sweeps against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpostorFilter {
    All,
    SkilledOnly,
    RandomOnly,
}

/// One operating point of a detection-error-tradeoff sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint<T> {
    pub threshold: T,
    pub far: T,
    pub frr: T,
}

fn split_scores<T: Real>(
    records: &[ScoreRecord<T>],
    filter: ImpostorFilter,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for r in records {
        if !r.score.is_finite() {
            return Err(Error::validation("score must be finite".to_string()));
        }
        match (r.label, filter) {
            (RecordLabel::Genuine, _) => genuine.push(r.score),
            (RecordLabel::SkilledForgery, ImpostorFilter::All | ImpostorFilter::SkilledOnly) => {
                impostor.push(r.score)
            }
            (RecordLabel::RandomForgery, ImpostorFilter::All | ImpostorFilter::RandomOnly) => {
                impostor.push(r.score)
            }
            _ => {}
        }
    }
    if genuine.is_empty() {
        return Err(Error::validation("no genuine records".to_string()));
    }
    if impostor.is_empty() {
        return Err(Error::validation("no impostor records after filtering".to_string()));
    }
    Ok((genuine, impostor))
}

fn sort_unstable<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores are totally ordered"));
}

/// FAR and FRR at one threshold under the accept-iff-score≥threshold rule,
/// given sorted score vectors.
fn rates_at_sorted<T: Real>(genuine: &[T], impostor: &[T], t: T) -> (T, T) {
    // partition_point gives the count of scores strictly below t.
    let imp_below = impostor.partition_point(|&s| s < t);
    let gen_below = genuine.partition_point(|&s| s < t);
    let far = from_count::<T>(impostor.len() - imp_below) / from_count(impostor.len());
    let frr = from_count::<T>(gen_below) / from_count(genuine.len());
    (far, frr)
}

fn sweep<T: Real>(mut genuine: Vec<T>, mut impostor: Vec<T>) -> Vec<DetPoint<T>> {
    sort_unstable(&mut genuine);
    sort_unstable(&mut impostor);
    let mut thresholds: Vec<T> = genuine.iter().chain(impostor.iter()).copied().collect();
    sort_unstable(&mut thresholds);
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(DetPoint {
        threshold: T::neg_infinity(),
        far: T::one(),
        frr: T::zero(),
    });
    for t in thresholds {
        let (far, frr) = rates_at_sorted(&genuine, &impostor, t);
        points.push(DetPoint { threshold: t, far, frr });
    }
    points.push(DetPoint {
        threshold: T::infinity(),
        far: T::zero(),
        frr: T::one(),
    });
    debug_assert!(points.windows(2).all(|w| w[1].far <= w[0].far && w[1].frr >= w[0].frr));
    points
}

/// Detection-error-tradeoff sweep: thresholds are the sorted distinct scores
/// plus ±∞ sentinels; a comparison is accepted iff its score ≥ threshold.
/// FAR is non-increasing and FRR non-decreasing along the sweep.
pub fn far_frr_curve<T: Real>(
    records: &[ScoreRecord<T>],
    impostor_filter: ImpostorFilter,
) -> Result<Vec<DetPoint<T>>> {
    let (genuine, impostor) = split_scores(records, impostor_filter)?;
    Ok(sweep(genuine, impostor))
}

/// FAR and FRR at an arbitrary threshold (not necessarily a sweep point).
pub fn confusion_at<T: Real>(
    records: &[ScoreRecord<T>],
    threshold: T,
    impostor_filter: ImpostorFilter,
) -> Result<(T, T)> {
    let (mut genuine, mut impostor) = split_scores(records, impostor_filter)?;
    sort_unstable(&mut genuine);
    sort_unstable(&mut impostor);
    Ok(rates_at_sorted(&genuine, &impostor, threshold))
}

/// The FAR/FRR crossing of a sweep, linearly interpolated between the two
/// adjacent operating points when no exact crossing exists, as a percentage.
fn eer_of_points<T: Real>(points: &[DetPoint<T>]) -> T {
    let hundred = real::<T>(100.0);
    // g = FAR − FRR starts at 1, ends at −1, and never increases.
    let mut prev = &points[0];
    for p in &points[1..] {
        let g = p.far - p.frr;
        if g <= T::zero() {
            if g == T::zero() {
                return p.far * hundred;
            }
            let g_prev = prev.far - prev.frr;
            let lambda = g_prev / (g_prev - g);
            return (prev.far + lambda * (p.far - prev.far)) * hundred;
        }
        prev = p;
    }
    unreachable!("sweep always ends at (far, frr) = (0, 1)")
}

/// Equal error rate in percent: the FAR/FRR crossing under the
/// accept-iff-score≥threshold sweep, linearly interpolated when the crossing
/// falls between operating points.
pub fn eer<T: Real>(records: &[ScoreRecord<T>], impostor_filter: ImpostorFilter) -> Result<T> {
    Ok(eer_of_points(&far_frr_curve(records, impostor_filter)?))
}

/// Equal error rate from already-separated similarity scores.
pub fn eer_from_scores<T: Real>(genuine: &[T], impostor: &[T]) -> Result<T> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::validation("both score classes must be nonempty".to_string()));
    }
    for s in genuine.iter().chain(impostor) {
        if !s.is_finite() {
            return Err(Error::validation("score must be finite".to_string()));
        }
    }
    Ok(eer_of_points(&sweep(genuine.to_vec(), impostor.to_vec())))
}

/// EERs with impostors restricted to skilled and to random forgeries, in
/// that order. The genuine set is identical in both.
pub fn forgery_breakdown<T: Real>(records: &[ScoreRecord<T>]) -> Result<(T, T)> {
    let has_skilled = records.iter().any(|r| r.label == RecordLabel::SkilledForgery);
    let has_random = records.iter().any(|r| r.label == RecordLabel::RandomForgery);
    if !has_skilled || !has_random {
        return Err(Error::validation(
            "breakdown needs both skilled and random forgeries".to_string(),
        ));
    }
    Ok((
        eer(records, ImpostorFilter::SkilledOnly)?,
        eer(records, ImpostorFilter::RandomOnly)?,
    ))
}

/// Aggregated evaluation of one labeled score set. `det_points` is the
/// all-impostors sweep; the per-type EERs are present only when that forgery
/// type occurs in the records.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub comparisons: usize,
    pub count_genuine: usize,
    pub count_skilled_forgery: usize,
    pub count_random_forgery: usize,
    pub eer_overall: T,
    pub eer_skilled: Option<T>,
    pub eer_random: Option<T>,
    pub det_points: Vec<DetPoint<T>>,
}

/// Evaluates a labeled record set: overall sweep and EER over the union of
/// both impostor types, plus per-type EERs where present.
pub fn evaluate<T: Real>(records: &[ScoreRecord<T>]) -> Result<EvalReport<T>> {
    let count = |l: RecordLabel| records.iter().filter(|r| r.label == l).count();
    let count_skilled = count(RecordLabel::SkilledForgery);
    let count_random = count(RecordLabel::RandomForgery);
    let det_points = far_frr_curve(records, ImpostorFilter::All)?;
    let eer_overall = eer_of_points(&det_points);
    let eer_skilled = if count_skilled > 0 {
        Some(eer(records, ImpostorFilter::SkilledOnly)?)
    } else {
        None
    };
    let eer_random = if count_random > 0 {
        Some(eer(records, ImpostorFilter::RandomOnly)?)
    } else {
        None
    };
    Ok(EvalReport {
        comparisons: records.len(),
        count_genuine: count(RecordLabel::Genuine),
        count_skilled_forgery: count_skilled,
        count_random_forgery: count_random,
        eer_overall,
        eer_skilled,
        eer_random,
        det_points,
    })
}

/// Serializes a report as flat key-value text. EERs are printed in percent
/// with two decimals; the DET sweep is exported separately by [`det_csv`].
pub fn render_report<T: Real>(report: &EvalReport<T>) -> String {
    let mut pairs = vec![
        ("comparisons".to_string(), report.comparisons.to_string()),
        ("count_genuine".to_string(), report.count_genuine.to_string()),
        (
            "count_skilled_forgery".to_string(),
            report.count_skilled_forgery.to_string(),
        ),
        (
            "count_random_forgery".to_string(),
            report.count_random_forgery.to_string(),
        ),
        ("eer_overall".to_string(), format!("{:.2}", report.eer_overall)),
    ];
    if let Some(v) = report.eer_skilled {
        pairs.push(("eer_skilled".to_string(), format!("{v:.2}")));
    }
    if let Some(v) = report.eer_random {
        pairs.push(("eer_random".to_string(), format!("{v:.2}")));
    }
    kvfmt::write_kv(&pairs)
}

/// Parses a rendered report. The DET sweep lives in its own CSV, so
/// `det_points` always comes back empty.
pub fn parse_report<T: Real>(text: &str) -> Result<EvalReport<T>> {
    let pairs = kvfmt::parse_kv(text)?;
    let get = |key: &str| -> Result<&str> {
        kvfmt::get(&pairs, key).ok_or_else(|| Error::validation(format!("report lacks key '{key}'")))
    };
    let count = |key: &str| -> Result<usize> {
        get(key)?
            .parse::<usize>()
            .map_err(|_| Error::validation(format!("key '{key}' is not a count")))
    };
    let percent = |raw: &str, key: &str| -> Result<T> {
        raw.parse::<T>()
            .map_err(|_| Error::validation(format!("key '{key}' is not a number")))
    };
    let optional = |key: &str| -> Result<Option<T>> {
        kvfmt::get(&pairs, key).map(|raw| percent(raw, key)).transpose()
    };
    Ok(EvalReport {
        comparisons: count("comparisons")?,
        count_genuine: count("count_genuine")?,
        count_skilled_forgery: count("count_skilled_forgery")?,
        count_random_forgery: count("count_random_forgery")?,
        eer_overall: percent(get("eer_overall")?, "eer_overall")?,
        eer_skilled: optional("eer_skilled")?,
        eer_random: optional("eer_random")?,
        det_points: Vec::new(),
    })
}

/// Renders a DET sweep as CSV for external plotting. Sentinel thresholds
/// appear as `inf`/`-inf`.
pub fn det_csv<T: Real>(points: &[DetPoint<T>]) -> String {
    let mut out = String::from("threshold,far,frr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.far, p.frr));
    }
    out
}

/// One team's placement within a task.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow<T> {
    /// 1-based position after sorting by (EER ascending, team ascending).
    pub position: usize,
    pub team: String,
    pub eer: T,
    pub points: u32,
    /// True when another team in the same task has exactly the same EER.
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRanking<T> {
    pub task: String,
    pub rows: Vec<RankRow<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamTotal {
    pub team: String,
    pub points: u32,
}

/// Per-task placements plus cross-task point totals.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable<T> {
    pub tasks: Vec<TaskRanking<T>>,
    pub totals: Vec<TeamTotal>,
}

const MEDAL_POINTS: [u32; 3] = [3, 2, 1];

/// Ranks teams per task by EER ascending (ties broken lexicographically by
/// team id and flagged), awards 3/2/1 points to the top three, and sums
/// totals across tasks, sorted by points descending then team id.
pub fn rank_teams<T: Real>(
    task_results: &BTreeMap<String, BTreeMap<String, T>>,
) -> Result<RankingTable<T>> {
    if task_results.is_empty() {
        return Err(Error::validation("no tasks to rank".to_string()));
    }
    let mut tasks = Vec::with_capacity(task_results.len());
    let mut totals: BTreeMap<&str, u32> = BTreeMap::new();
    for (task, teams) in task_results {
        if teams.is_empty() {
            return Err(Error::validation(format!("task '{task}' has no teams")));
        }
        let mut entries: Vec<(&String, T)> = Vec::with_capacity(teams.len());
        for (team, &eer) in teams {
            if !eer.is_finite() {
                return Err(Error::validation(format!(
                    "team '{team}' has a non-finite EER in task '{task}'"
                )));
            }
            entries.push((team, eer));
        }
        // BTreeMap iteration is already team-ascending, so a stable sort by
        // EER yields the lexicographic tie-break.
        entries.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite EERs"));
        let rows: Vec<RankRow<T>> = entries
            .iter()
            .enumerate()
            .map(|(idx, &(team, eer))| {
                let points = MEDAL_POINTS.get(idx).copied().unwrap_or(0);
                let tied = entries.iter().any(|&(other, e)| other != team && e == eer);
                *totals.entry(team).or_insert(0) += points;
                RankRow {
                    position: idx + 1,
                    team: team.clone(),
                    eer,
                    points,
                    tied,
                }
            })
            .collect();
        tasks.push(TaskRanking {
            task: task.clone(),
            rows,
        });
    }
    let mut totals: Vec<TeamTotal> = totals
        .into_iter()
        .map(|(team, points)| TeamTotal {
            team: team.to_string(),
            points,
        })
        .collect();
    totals.sort_by(|a, b| b.points.cmp(&a.points).then_with(|| a.team.cmp(&b.team)));
    Ok(RankingTable { tasks, totals })
}

/// Renders a ranking as a markdown document: one table per task plus the
/// totals table. Tied teams carry a `*` marker explained in a footnote.
pub fn render_ranking<T: Real>(table: &RankingTable<T>) -> String {
    let mut out = String::new();
    let mut any_tie = false;
    for task in &table.tasks {
        out.push_str(&format!("## {}\n\n", task.task));
        out.push_str("| position | team | eer_percent | points |\n");
        out.push_str("|---|---|---|---|\n");
        for row in &task.rows {
            let marker = if row.tied {
                any_tie = true;
                " *"
            } else {
                ""
            };
            out.push_str(&format!(
                "| {} | {}{} | {:.2} | {} |\n",
                row.position, row.team, marker, row.eer, row.points
            ));
        }
        out.push('\n');
    }
    out.push_str("## totals\n\n");
    out.push_str("| team | points |\n");
    out.push_str("|---|---|\n");
    for total in &table.totals {
        out.push_str(&format!("| {} | {} |\n", total.team, total.points));
    }
    if any_tie {
        out.push_str("\n\\* tied equal error rate; order within the tie is lexicographic\n");
    }
    out
}
