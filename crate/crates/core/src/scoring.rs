//! Score calibration: tanh-estimator normalization, weighted fusion,
//! threshold-based scorers, and orientation handling.

use crate::error::{Error, Result};
use crate::eval;
use crate::scalar::{from_count, real, Real};

/// Whether larger scores indicate genuine signatures. Every score stream
/// carries exactly one orientation; the evaluator consumes similarity-style
/// streams after [`to_similarity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreOrientation {
    HigherIsGenuine,
    LowerIsGenuine,
}

impl ScoreOrientation {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreOrientation::HigherIsGenuine => "higher_is_genuine",
            ScoreOrientation::LowerIsGenuine => "lower_is_genuine",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "higher_is_genuine" => Ok(ScoreOrientation::HigherIsGenuine),
            "lower_is_genuine" => Ok(ScoreOrientation::LowerIsGenuine),
            other => Err(Error::validation(format!("unknown orientation '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScoreOrientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_finite<T: Real>(scores: &[T], what: &str) -> Result<()> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation(format!("{what} contain a non-finite value")));
    }
    Ok(())
}

/// Tanh-estimator normalization into (0, 1):
/// s' = 0.5·(tanh(0.01·(s − mu)/sigma) + 1), strictly increasing in s.
pub fn tanh_normalize<T: Real>(scores: &[T], mu: T, sigma: T) -> Result<Vec<T>> {
    if sigma <= T::zero() || !sigma.is_finite() {
        return Err(Error::validation("sigma must be positive".to_string()));
    }
    if !mu.is_finite() {
        return Err(Error::validation("mu must be finite".to_string()));
    }
    check_finite(scores, "scores")?;
    let half = real::<T>(0.5);
    let slope = real::<T>(0.01);
    Ok(scores
        .iter()
        .map(|&s| half * ((slope * (s - mu) / sigma).tanh() + T::one()))
        .collect())
}

/// Mean and population standard deviation of a development score sample, the
/// (mu, sigma) inputs of [`tanh_normalize`].
pub fn fit_tanh_params<T: Real>(dev_scores: &[T]) -> Result<(T, T)> {
    if dev_scores.is_empty() {
        return Err(Error::validation("no development scores".to_string()));
    }
    check_finite(dev_scores, "development scores")?;
    let n = from_count::<T>(dev_scores.len());
    let mu = dev_scores.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = dev_scores
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mu) * (v - mu))
        / n;
    let sigma = var.sqrt();
    if sigma <= T::zero() {
        return Err(Error::validation(
            "development scores are constant; sigma would be zero".to_string(),
        ));
    }
    Ok((mu, sigma))
}

/// Weighted average Σ wᵢ·sᵢ / Σ wᵢ over per-branch scores.
pub fn fuse_weighted<T: Real>(scores: &[T], weights: &[T]) -> Result<T> {
    if scores.len() != weights.len() {
        return Err(Error::validation(format!(
            "{} scores but {} weights",
            scores.len(),
            weights.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::validation("nothing to fuse".to_string()));
    }
    check_finite(scores, "scores")?;
    let mut num = T::zero();
    let mut den = T::zero();
    for (&s, &w) in scores.iter().zip(weights) {
        if w < T::zero() || !w.is_finite() {
            return Err(Error::validation("weights must be nonnegative and finite".to_string()));
        }
        num = num + w * s;
        den = den + w;
    }
    if den <= T::zero() {
        return Err(Error::validation("weights sum to zero".to_string()));
    }
    Ok(num / den)
}

/// Grid resolution of the fusion-weight search: weights move in steps of
/// 1/20 = 0.05 over the probability simplex.
const FUSION_GRID_STEPS: usize = 20;

/// Exhaustive simplex grid search (step 0.05) for fusion weights minimizing
/// the equal error rate on development data.
///
/// `branch_scores[b][k]` is branch b's score for comparison k; `genuine[k]`
/// marks genuine comparisons. Ties keep the first grid point visited, so the
/// result is deterministic.
pub fn fit_fusion_weights<T: Real>(
    branch_scores: &[Vec<T>],
    genuine: &[bool],
    orientation: ScoreOrientation,
) -> Result<Vec<T>> {
    let b = branch_scores.len();
    if b == 0 {
        return Err(Error::validation("no score branches".to_string()));
    }
    let n = genuine.len();
    for (bi, scores) in branch_scores.iter().enumerate() {
        if scores.len() != n {
            return Err(Error::validation(format!(
                "branch {bi} has {} scores for {n} comparisons",
                scores.len()
            )));
        }
        check_finite(scores, "branch scores")?;
    }
    if !genuine.contains(&true) || !genuine.contains(&false) {
        return Err(Error::validation(
            "development data needs both genuine and impostor comparisons".to_string(),
        ));
    }

    // Enumerate integer compositions of FUSION_GRID_STEPS into b parts.
    let mut grid: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![0usize; b];
    fn fill(grid: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, idx: usize, left: usize) {
        if idx == current.len() - 1 {
            current[idx] = left;
            grid.push(current.clone());
            return;
        }
        for take in 0..=left {
            current[idx] = take;
            fill(grid, current, idx + 1, left - take);
        }
    }
    fill(&mut grid, &mut current, 0, FUSION_GRID_STEPS);

    let step = T::one() / from_count::<T>(FUSION_GRID_STEPS);
    let mut best: Option<(T, Vec<T>)> = None;
    for counts in grid {
        let weights: Vec<T> = counts.iter().map(|&k| from_count::<T>(k) * step).collect();
        let fused: Vec<T> = (0..n)
            .map(|k| {
                let row: Vec<T> = branch_scores.iter().map(|s| s[k]).collect();
                fuse_weighted(&row, &weights)
            })
            .collect::<Result<_>>()?;
        let similarity = to_similarity(&fused, orientation);
        let (gen, imp): (Vec<_>, Vec<_>) = similarity
            .iter()
            .zip(genuine)
            .partition(|(_, &is_gen)| is_gen);
        let eer = eval::eer_from_scores(
            &gen.into_iter().map(|(&s, _)| s).collect::<Vec<_>>(),
            &imp.into_iter().map(|(&s, _)| s).collect::<Vec<_>>(),
        )?;
        if best.as_ref().is_none_or(|(b_eer, _)| eer < *b_eer) {
            best = Some((eer, weights));
        }
    }
    Ok(best.expect("grid is never empty").1)
}

/// Threshold scorer over a distance d with genuine threshold g_th, forgery
/// threshold f_th, and scale s: P = (s·f_th − d)/(s·f_th − g_th).
/// Deliberately unclamped, so values outside [0,1] can occur.
pub fn sigstat_local_score<T: Real>(d: T, g_th: T, f_th: T, s: T) -> Result<T> {
    for (name, v) in [("d", d), ("g_th", g_th), ("f_th", f_th), ("s", s)] {
        if !v.is_finite() {
            return Err(Error::validation(format!("{name} must be finite")));
        }
    }
    if d < T::zero() {
        return Err(Error::validation("distance must be nonnegative".to_string()));
    }
    let den = s * f_th - g_th;
    if den == T::zero() {
        return Err(Error::validation("s*f_th equals g_th; scorer is undefined".to_string()));
    }
    Ok((s * f_th - d) / den)
}

/// Distance scorer interpolating between the genuine minimum and the forgery
/// median: P = 1 − (d_f_med − d)/(d_f_med − d_g_min), clamped to [0,1]
/// outside the interval.
pub fn sigstat_global_score<T: Real>(d: T, d_g_min: T, d_f_med: T) -> Result<T> {
    for (name, v) in [("d", d), ("d_g_min", d_g_min), ("d_f_med", d_f_med)] {
        if !v.is_finite() {
            return Err(Error::validation(format!("{name} must be finite")));
        }
    }
    if d_f_med <= d_g_min {
        return Err(Error::validation(
            "forgery median must exceed the genuine minimum".to_string(),
        ));
    }
    let p = T::one() - (d_f_med - d) / (d_f_med - d_g_min);
    Ok(p.max(T::zero()).min(T::one()))
}

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
pub(crate) fn quantile<T: Real>(values: &[T], q: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::validation("quantile of an empty sample".to_string()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::validation(format!("quantile {q} outside [0,1]")));
    }
    check_finite(values, "samples")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values are totally ordered"));
    let pos = real::<T>(q) * from_count::<T>(sorted.len() - 1);
    let lo = pos.floor().to_usize().expect("index in range");
    let hi = pos.ceil().to_usize().expect("index in range");
    let frac = pos - pos.floor();
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Default scale for [`sigstat_local_score`] produced by the fit helper.
const SIGSTAT_DEFAULT_SCALE: f64 = 2.0;

/// Starting-point calibration for the local scorer: g_th is the 5th
/// percentile of development genuine distances, f_th the median of forgery
/// distances, s fixed at 2.0. Returns (g_th, f_th, s).
pub fn fit_sigstat_local_params<T: Real>(
    genuine_dists: &[T],
    forgery_dists: &[T],
) -> Result<(T, T, T)> {
    let g_th = quantile(genuine_dists, 0.05)?;
    let f_th = quantile(forgery_dists, 0.50)?;
    let s = real::<T>(SIGSTAT_DEFAULT_SCALE);
    if s * f_th - g_th == T::zero() {
        return Err(Error::validation(
            "degenerate calibration: s*f_th equals g_th".to_string(),
        ));
    }
    Ok((g_th, f_th, s))
}

/// Calibration for the global scorer: the genuine distance minimum and the
/// forgery distance median. Returns (d_g_min, d_f_med).
pub fn fit_sigstat_global_params<T: Real>(
    genuine_dists: &[T],
    forgery_dists: &[T],
) -> Result<(T, T)> {
    let d_g_min = quantile(genuine_dists, 0.0)?;
    let d_f_med = quantile(forgery_dists, 0.50)?;
    if d_f_med <= d_g_min {
        return Err(Error::validation(
            "forgery median must exceed the genuine minimum".to_string(),
        ));
    }
    Ok((d_g_min, d_f_med))
}

/// Converts a score stream to the higher-is-genuine convention: distances
/// are negated, similarities pass through. Rank order with respect to
/// genuineness is preserved.
pub fn to_similarity<T: Real>(scores: &[T], orientation: ScoreOrientation) -> Vec<T> {
    match orientation {
        ScoreOrientation::HigherIsGenuine => scores.to_vec(),
        ScoreOrientation::LowerIsGenuine => scores.iter().map(|&s| -s).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_center_maps_to_half() {
        let out = tanh_normalize(&[5.0], 5.0, 2.0).unwrap();
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn tanh_matches_direct_evaluation() {
        let out = tanh_normalize(&[100.0f64], 0.0, 1.0).unwrap();
        assert!((out[0] - 0.8807970779778824).abs() < 1e-15);
    }

    #[test]
    fn tanh_preserves_order_and_stays_inside_unit_interval() {
        // Arguments stay below tanh's float saturation point.
        let sorted = [-300.0, -3.0, 0.0, 2.5, 300.0];
        let out = tanh_normalize(&sorted, 1.0, 0.5).unwrap();
        for w in out.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn tanh_rejects_bad_sigma() {
        assert!(tanh_normalize(&[1.0], 0.0, 0.0).is_err());
        assert!(tanh_normalize(&[1.0], 0.0, -1.0).is_err());
    }

    #[test]
    fn tanh_fit_uses_population_moments() {
        let (mu, sigma) = fit_tanh_params(&[1.0, 3.0]).unwrap();
        assert_eq!(mu, 2.0);
        assert_eq!(sigma, 1.0);
        assert!(fit_tanh_params(&[2.0, 2.0, 2.0]).is_err());
        assert!(fit_tanh_params(&[] as &[f64]).is_err());
    }

    #[test]
    fn fusion_matches_hand_values() {
        assert_eq!(fuse_weighted(&[0.9, 0.3], &[1.0, 0.0]).unwrap(), 0.9);
        assert_eq!(fuse_weighted(&[0.2, 0.8], &[1.0, 1.0]).unwrap(), 0.5);
        assert!((fuse_weighted(&[0.9f64, 0.3], &[2.0, 1.0]).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn fusion_rejects_invalid_weights() {
        assert!(fuse_weighted(&[1.0], &[1.0, 2.0]).is_err());
        assert!(fuse_weighted(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(fuse_weighted(&[1.0, 2.0], &[1.0, -1.0]).is_err());
        assert!(fuse_weighted(&[] as &[f64], &[]).is_err());
    }

    #[test]
    fn fusion_is_monotone_in_each_input() {
        let weights = [0.3, 0.7];
        let base = fuse_weighted(&[0.4, 0.6], &weights).unwrap();
        assert!(fuse_weighted(&[0.5, 0.6], &weights).unwrap() >= base);
        assert!(fuse_weighted(&[0.4, 0.7], &weights).unwrap() >= base);
    }

    #[test]
    fn fusion_weight_search_prefers_the_separating_branch() {
        // Branch 0 is pure noise; branch 1 separates perfectly.
        let noise = vec![0.5, 0.1, 0.9, 0.4, 0.6, 0.2];
        let clean = vec![0.9, 0.8, 0.95, 0.1, 0.2, 0.05];
        let genuine = [true, true, true, false, false, false];
        let weights = fit_fusion_weights(
            &[noise.clone(), clean.clone()],
            &genuine,
            ScoreOrientation::HigherIsGenuine,
        )
        .unwrap();
        assert!((weights.iter().copied().sum::<f64>() - 1.0).abs() < 1e-12);
        let fused: Vec<f64> = (0..6)
            .map(|k| fuse_weighted(&[noise[k], clean[k]], &weights).unwrap())
            .collect();
        let eer = crate::eval::eer_from_scores(&fused[..3], &fused[3..]).unwrap();
        assert_eq!(eer, 0.0);
    }

    #[test]
    fn fusion_weight_search_validates_inputs() {
        assert!(fit_fusion_weights::<f64>(&[], &[true], ScoreOrientation::HigherIsGenuine).is_err());
        assert!(fit_fusion_weights(
            &[vec![1.0, 2.0]],
            &[true, true],
            ScoreOrientation::HigherIsGenuine
        )
        .is_err());
        assert!(fit_fusion_weights(
            &[vec![1.0]],
            &[true, false],
            ScoreOrientation::HigherIsGenuine
        )
        .is_err());
    }

    #[test]
    fn local_scorer_hits_its_boundary_values() {
        assert_eq!(sigstat_local_score(0.5, 0.5, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(sigstat_local_score(2.0, 0.5, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(sigstat_local_score(1.25, 0.5, 1.0, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn local_scorer_is_unclamped() {
        assert!(sigstat_local_score(3.0, 0.5, 1.0, 2.0).unwrap() < 0.0);
        assert!(sigstat_local_score(0.1, 0.5, 1.0, 2.0).unwrap() > 1.0);
    }

    #[test]
    fn local_scorer_rejects_zero_denominator() {
        assert!(sigstat_local_score(1.0, 2.0, 1.0, 2.0).is_err());
        assert!(sigstat_local_score(-0.1, 0.5, 1.0, 2.0).is_err());
    }

    #[test]
    fn global_scorer_hits_its_boundary_values() {
        assert_eq!(sigstat_global_score(1.0, 1.0, 3.0).unwrap(), 0.0);
        assert_eq!(sigstat_global_score(3.0, 1.0, 3.0).unwrap(), 1.0);
        assert_eq!(sigstat_global_score(2.0, 1.0, 3.0).unwrap(), 0.5);
    }

    #[test]
    fn global_scorer_clamps_outside_the_interval() {
        assert_eq!(sigstat_global_score(0.0, 1.0, 3.0).unwrap(), 0.0);
        assert_eq!(sigstat_global_score(10.0, 1.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn global_scorer_is_monotone_in_distance() {
        let mut prev = -1.0;
        for i in 0..40 {
            let d = i as f64 * 0.1;
            let p = sigstat_global_score(d, 1.0, 3.0).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn global_scorer_rejects_degenerate_calibration() {
        assert!(sigstat_global_score(1.0, 3.0, 3.0).is_err());
        assert!(sigstat_global_score(1.0, 4.0, 3.0).is_err());
    }

    #[test]
    fn similarity_conversion_negates_distances_only() {
        assert_eq!(
            to_similarity(&[1.0, 3.0], ScoreOrientation::LowerIsGenuine),
            vec![-1.0, -3.0]
        );
        assert_eq!(
            to_similarity(&[1.0, 3.0], ScoreOrientation::HigherIsGenuine),
            vec![1.0, 3.0]
        );
    }

    #[test]
    fn sigstat_fit_helpers_use_the_documented_quantiles() {
        let genuine = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let forgery = [10.0f64, 20.0, 30.0];
        let (g_th, f_th, s) = fit_sigstat_local_params(&genuine, &forgery).unwrap();
        assert!((g_th - 1.2).abs() < 1e-12, "5th percentile of 1..5");
        assert_eq!(f_th, 20.0);
        assert_eq!(s, 2.0);
        let (d_g_min, d_f_med) = fit_sigstat_global_params(&genuine, &forgery).unwrap();
        assert_eq!(d_g_min, 1.0);
        assert_eq!(d_f_med, 20.0);
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert!(quantile(&v, 1.5).is_err());
    }

    #[test]
    fn orientation_tokens_round_trip() {
        for o in [ScoreOrientation::HigherIsGenuine, ScoreOrientation::LowerIsGenuine] {
            assert_eq!(ScoreOrientation::parse(o.as_str()).unwrap(), o);
        }
        assert!(ScoreOrientation::parse("sideways").is_err());
    }
}
