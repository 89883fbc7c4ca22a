//! Sequence alignment: classic DTW with path-normalized scoring, the
//! differentiable soft-DTW relaxation with its analytic gradient, a triplet
//! loss over soft-DTW distances, and DTW-based pre-alignment.

use crate::error::{Error, Result};
use crate::features::TimeFunctionMatrix;
use crate::scalar::{from_count, Real};

/// Per-frame distance between channel vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    SqEuclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::SqEuclidean => "sq_euclidean",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "euclidean" => Ok(Metric::Euclidean),
            "sq_euclidean" => Ok(Metric::SqEuclidean),
            other => Err(Error::validation(format!("unknown metric '{other}'"))),
        }
    }

    fn frame_dist<T: Real>(self, a: &[T], b: &[T]) -> T {
        let mut sum = T::zero();
        for (&x, &y) in a.iter().zip(b) {
            let d = x - y;
            sum = sum + d * d;
        }
        match self {
            Metric::Euclidean => sum.sqrt(),
            Metric::SqEuclidean => sum,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A monotone, continuous alignment between two sequences: starts at (0,0),
/// ends at (N−1,M−1), and each step increments i, j, or both by exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpingPath {
    pairs: Vec<(usize, usize)>,
}

impl WarpingPath {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::validation("warping path is empty".to_string()));
        }
        if pairs[0] != (0, 0) {
            return Err(Error::validation("warping path must start at (0,0)".to_string()));
        }
        for w in pairs.windows(2) {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            let di = i1.wrapping_sub(i0);
            let dj = j1.wrapping_sub(j0);
            if di > 1 || dj > 1 || (di == 0 && dj == 0) {
                return Err(Error::validation(format!(
                    "warping path step ({i0},{j0}) -> ({i1},{j1}) is not monotone-continuous"
                )));
            }
        }
        Ok(WarpingPath { pairs })
    }

    fn from_backtrack(pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(WarpingPath::new(pairs.clone()).is_ok());
        WarpingPath { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Outcome of a DTW alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult<T> {
    /// Minimum summed per-pair distance over all warping paths.
    pub cumulative_cost: T,
    /// `cumulative_cost` divided by the number of path pairs.
    pub normalized_score: T,
    pub path: WarpingPath,
}

/// Flattens `frames[i][c]` into a row-major buffer and validates shape:
/// at least one frame, uniform dimension ≥ 1, finite values.
fn flatten_frames<T: Real>(frames: &[Vec<T>], role: &str) -> Result<(Vec<T>, usize, usize)> {
    if frames.is_empty() {
        return Err(Error::validation(format!("{role} sequence is empty")));
    }
    let c = frames[0].len();
    if c == 0 {
        return Err(Error::validation(format!("{role} frames have no channels")));
    }
    let mut flat = Vec::with_capacity(frames.len() * c);
    for (i, frame) in frames.iter().enumerate() {
        if frame.len() != c {
            return Err(Error::validation(format!(
                "{role} frame {i} has {} channels, expected {c}",
                frame.len()
            )));
        }
        if frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("{role} frame {i} contains a non-finite value")));
        }
        flat.extend_from_slice(frame);
    }
    Ok((flat, frames.len(), c))
}

fn check_channel_dims(ca: usize, cb: usize) -> Result<()> {
    if ca != cb {
        return Err(Error::ChannelMismatch(format!(
            "sequences have {ca} and {cb} channels"
        )));
    }
    Ok(())
}

fn check_same_channels<T: Real>(a: &TimeFunctionMatrix<T>, b: &TimeFunctionMatrix<T>) -> Result<()> {
    if !a.same_channels(b) {
        return Err(Error::ChannelMismatch(format!(
            "channel sets differ: [{}] vs [{}]",
            a.names().collect::<Vec<_>>().join(", "),
            b.names().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(())
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if gamma <= T::zero() || !gamma.is_finite() {
        return Err(Error::validation("gamma must be positive and finite".to_string()));
    }
    Ok(())
}

const PTR_DIAG: u8 = 0;
const PTR_VERT: u8 = 1;
const PTR_HORIZ: u8 = 2;
const PTR_NONE: u8 = 3;

fn dtw_flat<T: Real>(fa: &[T], fb: &[T], n: usize, m: usize, c: usize, metric: Metric) -> AlignmentResult<T> {
    let mut cost = vec![T::zero(); n * m];
    let mut ptr = vec![PTR_NONE; n * m];
    for i in 0..n {
        for j in 0..m {
            let d = metric.frame_dist(&fa[i * c..(i + 1) * c], &fb[j * c..(j + 1) * c]);
            let (prev, p) = if i == 0 && j == 0 {
                (T::zero(), PTR_NONE)
            } else if i == 0 {
                (cost[j - 1], PTR_HORIZ)
            } else if j == 0 {
                (cost[(i - 1) * m], PTR_VERT)
            } else {
                // Strict improvement keeps the diagonal > vertical >
                // horizontal preference on ties.
                let mut best = cost[(i - 1) * m + (j - 1)];
                let mut p = PTR_DIAG;
                if cost[(i - 1) * m + j] < best {
                    best = cost[(i - 1) * m + j];
                    p = PTR_VERT;
                }
                if cost[i * m + (j - 1)] < best {
                    best = cost[i * m + (j - 1)];
                    p = PTR_HORIZ;
                }
                (best, p)
            };
            cost[i * m + j] = d + prev;
            ptr[i * m + j] = p;
        }
    }

    let mut pairs = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (n - 1, m - 1);
    loop {
        pairs.push((i, j));
        match ptr[i * m + j] {
            PTR_DIAG => {
                i -= 1;
                j -= 1;
            }
            PTR_VERT => i -= 1,
            PTR_HORIZ => j -= 1,
            _ => break,
        }
    }
    pairs.reverse();

    let cumulative_cost = cost[n * m - 1];
    let normalized_score = cumulative_cost / from_count(pairs.len());
    AlignmentResult {
        cumulative_cost,
        normalized_score,
        path: WarpingPath::from_backtrack(pairs),
    }
}

/// DTW over raw frame sequences (`a[i]` is the channel vector of frame i).
/// Accepts single-frame sequences, unlike the matrix-level entry point.
pub fn dtw_frames<T: Real>(a: &[Vec<T>], b: &[Vec<T>], metric: Metric) -> Result<AlignmentResult<T>> {
    let (fa, n, ca) = flatten_frames(a, "first")?;
    let (fb, m, cb) = flatten_frames(b, "second")?;
    check_channel_dims(ca, cb)?;
    Ok(dtw_flat(&fa, &fb, n, m, ca, metric))
}

/// Classic DTW between two feature matrices sharing a channel set.
///
/// The cumulative cost is the minimum over all monotone, continuous warping
/// paths of the summed per-pair channel-vector distance; ties prefer the
/// diagonal predecessor, then the vertical one, making the path
/// deterministic. The normalized score divides by the path's pair count.
pub fn dtw<T: Real>(
    a: &TimeFunctionMatrix<T>,
    b: &TimeFunctionMatrix<T>,
    metric: Metric,
) -> Result<AlignmentResult<T>> {
    check_same_channels(a, b)?;
    let (fa, fb) = (a.frames(), b.frames());
    Ok(dtw_flat(&fa, &fb, a.len(), b.len(), a.num_channels(), metric))
}

/// Numerically stable soft minimum: max-shifted so every exponent is ≤ 0.
fn softmin3<T: Real>(x: T, y: T, z: T, gamma: T) -> T {
    let m = x.min(y).min(z);
    let sum = ((m - x) / gamma).exp() + ((m - y) / gamma).exp() + ((m - z) / gamma).exp();
    m - gamma * sum.ln()
}

fn soft_dtw_flat<T: Real>(fa: &[T], fb: &[T], n: usize, m: usize, c: usize, gamma: T, metric: Metric) -> T {
    let mut r = vec![T::zero(); n * m];
    for i in 0..n {
        for j in 0..m {
            let d = metric.frame_dist(&fa[i * c..(i + 1) * c], &fb[j * c..(j + 1) * c]);
            // Border cells have a single predecessor; the hard sum equals the
            // soft minimum with infinite padding, keeping the gradient
            // recursion consistent.
            let prev = if i == 0 && j == 0 {
                T::zero()
            } else if i == 0 {
                r[j - 1]
            } else if j == 0 {
                r[(i - 1) * m]
            } else {
                softmin3(r[(i - 1) * m + j], r[i * m + (j - 1)], r[(i - 1) * m + (j - 1)], gamma)
            };
            r[i * m + j] = d + prev;
        }
    }
    r[n * m - 1]
}

/// Soft-DTW over raw frame sequences; see [`soft_dtw`].
pub fn soft_dtw_frames<T: Real>(a: &[Vec<T>], b: &[Vec<T>], gamma: T, metric: Metric) -> Result<T> {
    check_gamma(gamma)?;
    let (fa, n, ca) = flatten_frames(a, "first")?;
    let (fb, m, cb) = flatten_frames(b, "second")?;
    check_channel_dims(ca, cb)?;
    Ok(soft_dtw_flat(&fa, &fb, n, m, ca, gamma, metric))
}

/// Soft-DTW value: the DP recursion with the hard minimum replaced by a
/// temperature-γ soft minimum, r(i,j) = d(i,j) + softmin_γ(r(i−1,j),
/// r(i,j−1), r(i−1,j−1)).
///
/// The value never exceeds the hard DTW cumulative cost under the same
/// metric and approaches it as γ → 0⁺. It can dip below zero for identical
/// inputs (each interior cell contributes at most −γ·ln 3 of slack).
pub fn soft_dtw<T: Real>(
    a: &TimeFunctionMatrix<T>,
    b: &TimeFunctionMatrix<T>,
    gamma: T,
    metric: Metric,
) -> Result<T> {
    check_same_channels(a, b)?;
    check_gamma(gamma)?;
    let (fa, fb) = (a.frames(), b.frames());
    Ok(soft_dtw_flat(&fa, &fb, a.len(), b.len(), a.num_channels(), gamma, metric))
}

/// Value plus gradients with respect to both inputs, in flat row-major
/// layout. Squared-Euclidean local cost (the differentiable default).
fn soft_dtw_grad_flat<T: Real>(
    fa: &[T],
    fb: &[T],
    n: usize,
    m: usize,
    c: usize,
    gamma: T,
) -> (T, Vec<T>, Vec<T>) {
    let metric = Metric::SqEuclidean;
    let mut d = vec![T::zero(); n * m];
    for i in 0..n {
        for j in 0..m {
            d[i * m + j] = metric.frame_dist(&fa[i * c..(i + 1) * c], &fb[j * c..(j + 1) * c]);
        }
    }
    let mut r = vec![T::zero(); n * m];
    for i in 0..n {
        for j in 0..m {
            let prev = if i == 0 && j == 0 {
                T::zero()
            } else if i == 0 {
                r[j - 1]
            } else if j == 0 {
                r[(i - 1) * m]
            } else {
                softmin3(r[(i - 1) * m + j], r[i * m + (j - 1)], r[(i - 1) * m + (j - 1)], gamma)
            };
            r[i * m + j] = d[i * m + j] + prev;
        }
    }

    // Backward pass: e[i,j] = ∂r(N−1,M−1)/∂d(i,j). Each successor weight
    // exp((r[s] − d[s] − r[i,j])/γ) is the soft-min partial and is ≤ 1
    // because r[s] − d[s] soft-minimizes over r[i,j] among others.
    let mut e = vec![T::zero(); n * m];
    e[n * m - 1] = T::one();
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            if i == n - 1 && j == m - 1 {
                continue;
            }
            let here = r[i * m + j];
            let mut acc = T::zero();
            if i + 1 < n {
                let s = (i + 1) * m + j;
                acc = acc + ((r[s] - d[s] - here) / gamma).exp() * e[s];
            }
            if j + 1 < m {
                let s = i * m + (j + 1);
                acc = acc + ((r[s] - d[s] - here) / gamma).exp() * e[s];
            }
            if i + 1 < n && j + 1 < m {
                let s = (i + 1) * m + (j + 1);
                acc = acc + ((r[s] - d[s] - here) / gamma).exp() * e[s];
            }
            e[i * m + j] = acc;
        }
    }

    // Chain through d(i,j) = Σ_c (a_ic − b_jc)².
    let two = T::one() + T::one();
    let mut ga = vec![T::zero(); n * c];
    let mut gb = vec![T::zero(); m * c];
    for i in 0..n {
        for j in 0..m {
            let w = two * e[i * m + j];
            if w == T::zero() {
                continue;
            }
            for k in 0..c {
                let diff = fa[i * c + k] - fb[j * c + k];
                ga[i * c + k] = ga[i * c + k] + w * diff;
                gb[j * c + k] = gb[j * c + k] - w * diff;
            }
        }
    }
    (r[n * m - 1], ga, gb)
}

fn frames_to_rows<T: Real>(flat: Vec<T>, n: usize, c: usize) -> Vec<Vec<T>> {
    let mut rows = Vec::with_capacity(n);
    let mut it = flat.into_iter();
    for _ in 0..n {
        rows.push(it.by_ref().take(c).collect());
    }
    rows
}

/// Soft-DTW value and the gradients with respect to both inputs, each in the
/// `[frame][channel]` layout of the corresponding input.
pub type ValueWithGrads<T> = (T, Vec<Vec<T>>, Vec<Vec<T>>);

/// Soft-DTW value and gradients over raw frame sequences. Gradients share
/// their input's `[frame][channel]` layout.
pub fn soft_dtw_grad_frames<T: Real>(
    a: &[Vec<T>],
    b: &[Vec<T>],
    gamma: T,
) -> Result<ValueWithGrads<T>> {
    check_gamma(gamma)?;
    let (fa, n, ca) = flatten_frames(a, "first")?;
    let (fb, m, cb) = flatten_frames(b, "second")?;
    check_channel_dims(ca, cb)?;
    let (value, ga, gb) = soft_dtw_grad_flat(&fa, &fb, n, m, ca, gamma);
    Ok((value, frames_to_rows(ga, n, ca), frames_to_rows(gb, m, cb)))
}

fn flat_to_channel_major<T: Real>(flat: &[T], n: usize, c: usize) -> Vec<Vec<T>> {
    (0..c).map(|k| (0..n).map(|i| flat[i * c + k]).collect()).collect()
}

/// Gradient of [`soft_dtw`] (squared-Euclidean metric) with respect to `a`,
/// as one vector per channel of `a`, computed by the backward recursion over
/// the soft-alignment matrix.
pub fn soft_dtw_grad<T: Real>(
    a: &TimeFunctionMatrix<T>,
    b: &TimeFunctionMatrix<T>,
    gamma: T,
) -> Result<Vec<Vec<T>>> {
    check_same_channels(a, b)?;
    check_gamma(gamma)?;
    let (fa, fb) = (a.frames(), b.frames());
    let c = a.num_channels();
    let (_, ga, _) = soft_dtw_grad_flat(&fa, &fb, a.len(), b.len(), c, gamma);
    Ok(flat_to_channel_major(&ga, a.len(), c))
}

/// Hinge loss over soft-DTW distances with gradients for all three inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletResult<T> {
    pub loss: T,
    /// One vector per channel, matching the anchor's channel order.
    pub grad_anchor: Vec<Vec<T>>,
    pub grad_positive: Vec<Vec<T>>,
    pub grad_negative: Vec<Vec<T>>,
}

/// Triplet loss max(0, margin + softdtw(anchor,positive) −
/// softdtw(anchor,negative)) under the squared-Euclidean metric, with
/// gradients. All gradients are zero when the hinge is inactive.
pub fn triplet_loss<T: Real>(
    anchor: &TimeFunctionMatrix<T>,
    positive: &TimeFunctionMatrix<T>,
    negative: &TimeFunctionMatrix<T>,
    margin: T,
    gamma: T,
) -> Result<TripletResult<T>> {
    check_same_channels(anchor, positive)?;
    check_same_channels(anchor, negative)?;
    check_gamma(gamma)?;
    if margin < T::zero() || !margin.is_finite() {
        return Err(Error::validation("margin must be nonnegative and finite".to_string()));
    }

    let c = anchor.num_channels();
    let (fa, fp, fn_) = (anchor.frames(), positive.frames(), negative.frames());
    let (n_a, n_p, n_n) = (anchor.len(), positive.len(), negative.len());
    let (d_pos, ga_pos, gp) = soft_dtw_grad_flat(&fa, &fp, n_a, n_p, c, gamma);
    let (d_neg, ga_neg, gn) = soft_dtw_grad_flat(&fa, &fn_, n_a, n_n, c, gamma);

    let raw = margin + d_pos - d_neg;
    if raw > T::zero() {
        let grad_anchor: Vec<T> = ga_pos.iter().zip(&ga_neg).map(|(&p, &n)| p - n).collect();
        let grad_negative: Vec<T> = gn.iter().map(|&v| -v).collect();
        Ok(TripletResult {
            loss: raw,
            grad_anchor: flat_to_channel_major(&grad_anchor, n_a, c),
            grad_positive: flat_to_channel_major(&gp, n_p, c),
            grad_negative: flat_to_channel_major(&grad_negative, n_n, c),
        })
    } else {
        Ok(TripletResult {
            loss: T::zero(),
            grad_anchor: vec![vec![T::zero(); n_a]; c],
            grad_positive: vec![vec![T::zero(); n_p]; c],
            grad_negative: vec![vec![T::zero(); n_n]; c],
        })
    }
}

/// Expands both inputs along the optimal Euclidean-DTW path: output k carries
/// a's frame i_k and b's frame j_k, so both outputs share the path's length
/// and contain only frames copied from the originals.
pub fn pre_align<T: Real>(
    a: &TimeFunctionMatrix<T>,
    b: &TimeFunctionMatrix<T>,
) -> Result<(TimeFunctionMatrix<T>, TimeFunctionMatrix<T>)> {
    let result = dtw(a, b, Metric::Euclidean)?;
    let a_idx: Vec<usize> = result.path.pairs().iter().map(|&(i, _)| i).collect();
    let b_idx: Vec<usize> = result.path.pairs().iter().map(|&(_, j)| j).collect();
    Ok((a.gather(&a_idx), b.gather(&b_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Channel;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tfm(channels: &[Vec<f64>]) -> TimeFunctionMatrix<f64> {
        let chans = channels
            .iter()
            .enumerate()
            .map(|(i, v)| Channel::new(format!("c{i}"), v.clone()))
            .collect();
        TimeFunctionMatrix::new(chans, 10.0).unwrap()
    }

    fn random_tfm(rng: &mut ChaCha8Rng, channels: usize, len: usize) -> TimeFunctionMatrix<f64> {
        let chans: Vec<Vec<f64>> = (0..channels)
            .map(|_| (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        tfm(&chans)
    }

    /// Minimum path cost from (i,j) to the end by exhaustive recursion.
    fn brute_force(d: &[Vec<f64>], i: usize, j: usize) -> f64 {
        let (n, m) = (d.len(), d[0].len());
        let here = d[i][j];
        if i == n - 1 && j == m - 1 {
            return here;
        }
        let mut best = f64::INFINITY;
        if i + 1 < n {
            best = best.min(brute_force(d, i + 1, j));
        }
        if j + 1 < m {
            best = best.min(brute_force(d, i, j + 1));
        }
        if i + 1 < n && j + 1 < m {
            best = best.min(brute_force(d, i + 1, j + 1));
        }
        here + best
    }

    #[test]
    fn identical_sequences_align_on_the_diagonal_at_zero_cost() {
        let a = tfm(&[vec![0.5, 1.0, -2.0]]);
        let r = dtw(&a, &a, Metric::Euclidean).unwrap();
        assert_eq!(r.cumulative_cost, 0.0);
        assert_eq!(r.normalized_score, 0.0);
        assert_eq!(r.path.pairs(), &[(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn dtw_matches_hand_computed_tables() {
        let r = dtw(&tfm(&[vec![0.0, 0.0]]), &tfm(&[vec![1.0, 1.0]]), Metric::Euclidean).unwrap();
        assert_eq!(r.cumulative_cost, 2.0);
        assert_eq!(r.path.len(), 2);
        assert_eq!(r.normalized_score, 1.0);

        let r = dtw(&tfm(&[vec![0.0, 1.0]]), &tfm(&[vec![0.0, 2.0]]), Metric::Euclidean).unwrap();
        assert_eq!(r.cumulative_cost, 1.0);
        assert_eq!(r.path.pairs(), &[(0, 0), (1, 1)]);
        assert_eq!(r.normalized_score, 0.5);
    }

    #[test]
    fn dtw_rejects_mismatched_channel_sets() {
        let a = tfm(&[vec![0.0, 1.0]]);
        let b = TimeFunctionMatrix::new(vec![Channel::new("other", vec![0.0, 1.0])], 10.0).unwrap();
        assert!(matches!(dtw(&a, &b, Metric::Euclidean), Err(Error::ChannelMismatch(_))));
        let two = tfm(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert!(dtw(&a, &two, Metric::Euclidean).is_err());
    }

    #[test]
    fn dtw_cost_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (la, lb) = (rng.gen_range(2..7), rng.gen_range(2..7));
            let a = random_tfm(&mut rng, 2, la);
            let b = random_tfm(&mut rng, 2, lb);
            let ab = dtw(&a, &b, Metric::Euclidean).unwrap();
            let ba = dtw(&b, &a, Metric::Euclidean).unwrap();
            assert!((ab.cumulative_cost - ba.cumulative_cost).abs() < 1e-12);
        }
    }

    #[test]
    fn dtw_agrees_with_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (n, m) = (rng.gen_range(1..6), rng.gen_range(1..6));
            let a: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
            let b: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
            let d: Vec<Vec<f64>> = a
                .iter()
                .map(|x| b.iter().map(|y| (x[0] - y[0]).abs()).collect())
                .collect();
            let got = dtw_frames(&a, &b, Metric::Euclidean).unwrap();
            assert_eq!(got.cumulative_cost, brute_force(&d, 0, 0));
        }
    }

    #[test]
    fn soft_dtw_on_single_samples_equals_the_frame_distance() {
        let a = vec![vec![3.0, -1.0]];
        let b = vec![vec![1.0, 2.0]];
        for gamma in [1.0, 0.1, 0.003] {
            let v = soft_dtw_frames(&a, &b, gamma, Metric::SqEuclidean).unwrap();
            assert_eq!(v, 4.0 + 9.0);
            let e = soft_dtw_frames(&a, &b, gamma, Metric::Euclidean).unwrap();
            assert_eq!(e, 13.0f64.sqrt());
        }
    }

    #[test]
    fn soft_dtw_lower_bounds_dtw_and_decreases_with_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_tfm(&mut rng, 2, 10);
        let b = random_tfm(&mut rng, 2, 12);
        let hard = dtw(&a, &b, Metric::SqEuclidean).unwrap().cumulative_cost;
        let mut prev = f64::NEG_INFINITY;
        for gamma in [1.0, 0.1, 0.01, 0.001] {
            let v = soft_dtw(&a, &b, gamma, Metric::SqEuclidean).unwrap();
            assert!(v <= hard);
            assert!(v >= prev, "soft value must rise as gamma falls");
            prev = v;
        }
        assert!((prev - hard).abs() / hard < 1e-3, "gamma=1e-3 should approach the hard cost");
    }

    #[test]
    fn soft_dtw_of_identical_inputs_is_slightly_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_tfm(&mut rng, 2, 8);
        let v = soft_dtw(&a, &a, 1.0, Metric::SqEuclidean).unwrap();
        let bound = -((3.0f64).ln() * (8 + 8) as f64);
        assert!(v <= 0.0);
        assert!(v >= bound);
    }

    #[test]
    fn soft_dtw_rejects_nonpositive_gamma() {
        let a = tfm(&[vec![0.0, 1.0]]);
        assert!(soft_dtw(&a, &a, 0.0, Metric::SqEuclidean).is_err());
        assert!(soft_dtw(&a, &a, -1.0, Metric::SqEuclidean).is_err());
    }

    #[test]
    fn single_sample_gradient_is_twice_the_difference() {
        let a = vec![vec![3.0, -1.0]];
        let b = vec![vec![1.0, 2.0]];
        let (value, ga, gb) = soft_dtw_grad_frames(&a, &b, 0.5).unwrap();
        assert_eq!(value, 13.0);
        assert_eq!(ga, vec![vec![4.0, -6.0]]);
        assert_eq!(gb, vec![vec![-4.0, 6.0]]);
    }

    fn fd_check(a: &TimeFunctionMatrix<f64>, b: &TimeFunctionMatrix<f64>, gamma: f64) -> f64 {
        let h = 1e-5;
        let grad = soft_dtw_grad(a, b, gamma).unwrap();
        let mut worst = 0.0f64;
        for (ci, grad_channel) in grad.iter().enumerate() {
            for si in 0..a.len() {
                let perturb = |delta: f64| {
                    let chans: Vec<Channel<f64>> = a
                        .channels()
                        .iter()
                        .enumerate()
                        .map(|(k, ch)| {
                            let mut vals = ch.values.clone();
                            if k == ci {
                                vals[si] += delta;
                            }
                            Channel::new(ch.name.clone(), vals)
                        })
                        .collect();
                    TimeFunctionMatrix::new(chans, a.sample_period()).unwrap()
                };
                let up = soft_dtw(&perturb(h), b, gamma, Metric::SqEuclidean).unwrap();
                let down = soft_dtw(&perturb(-h), b, gamma, Metric::SqEuclidean).unwrap();
                let fd = (up - down) / (2.0 * h);
                let rel = (grad_channel[si] - fd).abs() / fd.abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_tfm(&mut rng, 2, 8);
        let b = random_tfm(&mut rng, 2, 10);
        assert!(fd_check(&a, &b, 0.1) < 1e-4);
    }

    #[test]
    fn gradients_swap_roles_under_argument_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_tfm(&mut rng, 2, 6);
        let b = random_tfm(&mut rng, 2, 7);
        let grad_a = soft_dtw_grad(&a, &b, 0.2).unwrap();
        let (_, _, gb_frames) = soft_dtw_grad_frames(
            &(0..b.len())
                .map(|i| b.channels().iter().map(|ch| ch.values[i]).collect())
                .collect::<Vec<_>>(),
            &(0..a.len())
                .map(|i| a.channels().iter().map(|ch| ch.values[i]).collect())
                .collect::<Vec<_>>(),
            0.2,
        )
        .unwrap();
        // Swapping arguments swaps which side each gradient refers to.
        for ci in 0..2 {
            for si in 0..a.len() {
                assert!((grad_a[ci][si] - gb_frames[si][ci]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inactive_hinge_yields_zero_loss_and_gradients() {
        let anchor = tfm(&[vec![0.0, 1.0, 2.0]]);
        let negative = tfm(&[vec![10.0, 11.0, 12.0]]);
        let r = triplet_loss(&anchor, &anchor, &negative, 0.0, 0.1).unwrap();
        assert_eq!(r.loss, 0.0);
        assert!(r.grad_anchor.iter().flatten().all(|&g| g == 0.0));
        assert!(r.grad_positive.iter().flatten().all(|&g| g == 0.0));
        assert!(r.grad_negative.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn equal_positive_and_negative_leave_only_the_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let anchor = random_tfm(&mut rng, 2, 5);
        let other = random_tfm(&mut rng, 2, 6);
        let r = triplet_loss(&anchor, &other, &other, 1.5, 0.1).unwrap();
        assert!((r.loss - 1.5).abs() < 1e-12);
    }

    #[test]
    fn triplet_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let anchor = random_tfm(&mut rng, 2, 5);
        let positive = random_tfm(&mut rng, 2, 6);
        let negative = random_tfm(&mut rng, 2, 4);
        let (margin, gamma, h) = (1.0, 0.1, 1e-5);
        let r = triplet_loss(&anchor, &positive, &negative, margin, gamma).unwrap();
        assert!(r.loss > 0.0, "hinge must be active for this check");

        let rebuild = |base: &TimeFunctionMatrix<f64>, ci: usize, si: usize, delta: f64| {
            let chans: Vec<Channel<f64>> = base
                .channels()
                .iter()
                .enumerate()
                .map(|(k, ch)| {
                    let mut vals = ch.values.clone();
                    if k == ci {
                        vals[si] += delta;
                    }
                    Channel::new(ch.name.clone(), vals)
                })
                .collect();
            TimeFunctionMatrix::new(chans, base.sample_period()).unwrap()
        };
        let loss_of = |a: &TimeFunctionMatrix<f64>, p: &TimeFunctionMatrix<f64>, n: &TimeFunctionMatrix<f64>| {
            triplet_loss(a, p, n, margin, gamma).unwrap().loss
        };

        let mut worst = 0.0f64;
        for ci in 0..2 {
            for si in 0..anchor.len() {
                let fd = (loss_of(&rebuild(&anchor, ci, si, h), &positive, &negative)
                    - loss_of(&rebuild(&anchor, ci, si, -h), &positive, &negative))
                    / (2.0 * h);
                worst = worst.max((r.grad_anchor[ci][si] - fd).abs() / fd.abs().max(1.0));
            }
            for si in 0..positive.len() {
                let fd = (loss_of(&anchor, &rebuild(&positive, ci, si, h), &negative)
                    - loss_of(&anchor, &rebuild(&positive, ci, si, -h), &negative))
                    / (2.0 * h);
                worst = worst.max((r.grad_positive[ci][si] - fd).abs() / fd.abs().max(1.0));
            }
            for si in 0..negative.len() {
                let fd = (loss_of(&anchor, &positive, &rebuild(&negative, ci, si, h))
                    - loss_of(&anchor, &positive, &rebuild(&negative, ci, si, -h)))
                    / (2.0 * h);
                worst = worst.max((r.grad_negative[ci][si] - fd).abs() / fd.abs().max(1.0));
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn triplet_rejects_negative_margin() {
        let a = tfm(&[vec![0.0, 1.0]]);
        assert!(triplet_loss(&a, &a, &a, -0.1, 0.1).is_err());
    }

    #[test]
    fn pre_align_of_identical_inputs_is_the_identity() {
        let a = tfm(&[vec![0.0, 1.0, 2.0], vec![5.0, 4.0, 3.0]]);
        let (aa, bb) = pre_align(&a, &a).unwrap();
        assert_eq!(aa, a);
        assert_eq!(bb, a);
    }

    #[test]
    fn pre_align_outputs_share_a_bounded_length() {
        let a = tfm(&[vec![0.0, 5.0, 10.0]]);
        let b = tfm(&[vec![0.0, 2.0, 5.0, 8.0, 10.0]]);
        let (aa, bb) = pre_align(&a, &b).unwrap();
        assert_eq!(aa.len(), bb.len());
        assert!(aa.len() >= 5 && aa.len() <= 7);
        // Every aligned value is copied from the originals.
        let src = a.channel("c0").unwrap();
        assert!(aa.channel("c0").unwrap().iter().all(|v| src.contains(v)));
    }

    #[test]
    fn diagonal_cost_after_pre_align_equals_the_original() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let (la, lb) = (rng.gen_range(3..8), rng.gen_range(3..8));
            let a = random_tfm(&mut rng, 2, la);
            let b = random_tfm(&mut rng, 2, lb);
            let original = dtw(&a, &b, Metric::Euclidean).unwrap().cumulative_cost;
            let (aa, bb) = pre_align(&a, &b).unwrap();
            let mut diagonal = 0.0;
            for k in 0..aa.len() {
                let fa: Vec<f64> = aa.channels().iter().map(|ch| ch.values[k]).collect();
                let fb: Vec<f64> = bb.channels().iter().map(|ch| ch.values[k]).collect();
                diagonal += fa
                    .iter()
                    .zip(&fb)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
            assert!((diagonal - original).abs() < 1e-12);
        }
    }

    #[test]
    fn warping_path_validation_rejects_bad_shapes() {
        assert!(WarpingPath::new(vec![]).is_err());
        assert!(WarpingPath::new(vec![(1, 0)]).is_err());
        assert!(WarpingPath::new(vec![(0, 0), (2, 1)]).is_err());
        assert!(WarpingPath::new(vec![(0, 0), (0, 0)]).is_err());
        assert!(WarpingPath::new(vec![(0, 0), (1, 1), (1, 2)]).is_ok());
    }

    #[test]
    fn metric_tokens_round_trip() {
        for m in [Metric::Euclidean, Metric::SqEuclidean] {
            assert_eq!(Metric::parse(m.as_str()).unwrap(), m);
        }
        assert!(Metric::parse("cosine").is_err());
    }

    #[test]
    fn alignment_works_in_single_precision() {
        let a = vec![vec![0.0f32], vec![1.0]];
        let b = vec![vec![0.0f32], vec![2.0]];
        let r = dtw_frames(&a, &b, Metric::Euclidean).unwrap();
        assert_eq!(r.cumulative_cost, 1.0);
    }
}
