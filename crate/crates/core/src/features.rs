//! Feature extraction: per-sample time-function channels for the DTW-based
//! matchers, global statistics vectors, and truncated path signatures.

use crate::error::{Error, Result};
use crate::ingest::RawSignature;
use crate::scalar::{from_count, real, Real};

/// Name of the pressure channel inside a [`TimeFunctionMatrix`]. Preprocess
/// policies key off this name.
pub const PRESSURE_CHANNEL: &str = "pressure";

/// Floor for ratio and logarithm singularities in derived channels.
const EPS: f64 = 1e-8;

/// One named time-function channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    pub name: String,
    pub values: Vec<T>,
}

impl<T> Channel<T> {
    pub fn new(name: impl Into<String>, values: Vec<T>) -> Self {
        Channel {
            name: name.into(),
            values,
        }
    }
}

/// A bundle of equally long time-function channels sampled at a fixed period.
///
/// Invariants: at least one channel, all channels share a length of at least
/// 2, all values finite, unique channel names, positive sample period (ms).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunctionMatrix<T> {
    channels: Vec<Channel<T>>,
    sample_period: T,
}

impl<T: Real> TimeFunctionMatrix<T> {
    pub fn new(channels: Vec<Channel<T>>, sample_period: T) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::validation("at least one channel required".to_string()));
        }
        if sample_period <= T::zero() || !sample_period.is_finite() {
            return Err(Error::validation("sample period must be positive".to_string()));
        }
        let n = channels[0].values.len();
        if n < 2 {
            return Err(Error::TooShort { len: n, min: 2 });
        }
        for (i, ch) in channels.iter().enumerate() {
            if ch.values.len() != n {
                return Err(Error::ChannelMismatch(format!(
                    "channel '{}' has {} samples, expected {n}",
                    ch.name,
                    ch.values.len()
                )));
            }
            if ch.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "channel '{}' contains a non-finite value",
                    ch.name
                )));
            }
            if channels[..i].iter().any(|prev| prev.name == ch.name) {
                return Err(Error::validation(format!("duplicate channel name '{}'", ch.name)));
            }
        }
        Ok(TimeFunctionMatrix {
            channels,
            sample_period,
        })
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Sample spacing in milliseconds.
    pub fn sample_period(&self) -> T {
        self.sample_period
    }

    pub fn channels(&self) -> &[Channel<T>] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&[T]> {
        self.channels
            .iter()
            .find(|ch| ch.name == name)
            .map(|ch| ch.values.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|ch| ch.name.as_str())
    }

    /// True when both matrices carry the same channel names in the same order.
    pub fn same_channels(&self, other: &Self) -> bool {
        self.num_channels() == other.num_channels() && self.names().eq(other.names())
    }

    /// Copies the selected sample indices into a new matrix, preserving
    /// channel names. Used by alignment expansion.
    pub(crate) fn gather(&self, indices: &[usize]) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|ch| Channel {
                name: ch.name.clone(),
                values: indices.iter().map(|&i| ch.values[i]).collect(),
            })
            .collect();
        TimeFunctionMatrix {
            channels,
            sample_period: self.sample_period,
        }
    }

    /// Row-major frame buffer (`len() x num_channels()`), for cache-friendly
    /// per-frame distance loops.
    pub(crate) fn frames(&self) -> Vec<T> {
        let n = self.len();
        let c = self.num_channels();
        let mut out = vec![T::zero(); n * c];
        for (ci, ch) in self.channels.iter().enumerate() {
            for (i, &v) in ch.values.iter().enumerate() {
                out[i * c + ci] = v;
            }
        }
        out
    }
}

/// A named vector of per-signature global statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFeatureVector<T> {
    entries: Vec<(String, T)>,
}

impl<T: Real> GlobalFeatureVector<T> {
    pub fn new(entries: Vec<(String, T)>) -> Result<Self> {
        for (i, (name, value)) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::validation(format!("feature '{name}' is non-finite")));
            }
            if entries[..i].iter().any(|(prev, _)| prev == name) {
                return Err(Error::validation(format!("duplicate feature name '{name}'")));
            }
        }
        Ok(GlobalFeatureVector { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.entries.iter().map(|&(_, v)| v)
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), *v))
    }
}

/// Backward first difference scaled by the sample period; `output[0] = 0`.
pub fn derivative<T: Real>(series: &[T], sample_period: T) -> Result<Vec<T>> {
    if sample_period <= T::zero() || !sample_period.is_finite() {
        return Err(Error::validation("sample period must be positive".to_string()));
    }
    if series.len() < 2 {
        return Err(Error::TooShort {
            len: series.len(),
            min: 2,
        });
    }
    let mut out = Vec::with_capacity(series.len());
    out.push(T::zero());
    for n in 1..series.len() {
        out.push((series[n] - series[n - 1]) / sample_period);
    }
    Ok(out)
}

/// Mean sample spacing in ms; exact for uniformly resampled signatures.
fn sample_period_of<T: Real>(sig: &RawSignature<T>) -> Result<T> {
    let duration = sig.duration();
    if duration <= T::zero() {
        return Err(Error::DegenerateDuration);
    }
    Ok(duration / from_count(sig.len() - 1))
}

/// Path-tangent angle from velocity components via the two-argument
/// arctangent. Where both components are zero the previous angle carries
/// forward (0 at the first sample).
fn tangent_angle<T: Real>(x_vel: &[T], y_vel: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(x_vel.len());
    let mut prev = T::zero();
    for i in 0..x_vel.len() {
        let angle = if x_vel[i] == T::zero() && y_vel[i] == T::zero() {
            prev
        } else {
            y_vel[i].atan2(x_vel[i])
        };
        out.push(angle);
        prev = angle;
    }
    out
}

fn require_len<T: Real>(sig: &RawSignature<T>, min: usize) -> Result<()> {
    if sig.len() < min {
        return Err(Error::TooShort {
            len: sig.len(),
            min,
        });
    }
    Ok(())
}

/// Twelve kinematic channels: velocities, speed, path-tangent angle and its
/// cosine/sine, pressure, speed rate, angle rate, log curvature radius,
/// centripetal acceleration, and total acceleration.
///
/// Expects a uniformly resampled signature. Captures without pressure get a
/// constant-one pressure channel. The curvature-radius ratio |v/θ̇| is floored
/// at 1e-8 (both the ratio and its denominator) so the log stays finite.
pub fn extract_dlvc12<T: Real>(sig: &RawSignature<T>) -> Result<TimeFunctionMatrix<T>> {
    require_len(sig, 3)?;
    let h = sample_period_of(sig)?;
    let eps = real::<T>(EPS);

    let x_vel = derivative(&sig.xs(), h)?;
    let y_vel = derivative(&sig.ys(), h)?;
    let speed: Vec<T> = x_vel
        .iter()
        .zip(&y_vel)
        .map(|(&vx, &vy)| (vx * vx + vy * vy).sqrt())
        .collect();
    let angle = tangent_angle(&x_vel, &y_vel);
    let cos_a: Vec<T> = angle.iter().map(|&a| a.cos()).collect();
    let sin_a: Vec<T> = angle.iter().map(|&a| a.sin()).collect();
    let pressure = sig.ps().unwrap_or_else(|| vec![T::one(); sig.len()]);
    let speed_rate = derivative(&speed, h)?;
    let angle_rate = derivative(&angle, h)?;
    let log_curv: Vec<T> = speed
        .iter()
        .zip(&angle_rate)
        .map(|(&v, &w)| (v.abs() / w.abs().max(eps)).max(eps).ln())
        .collect();
    let centripetal: Vec<T> = speed.iter().zip(&angle_rate).map(|(&v, &w)| v * w).collect();
    let total_accel: Vec<T> = speed_rate
        .iter()
        .zip(&centripetal)
        .map(|(&dv, &c)| (dv * dv + c * c).sqrt())
        .collect();

    TimeFunctionMatrix::new(
        vec![
            Channel::new("x_vel", x_vel),
            Channel::new("y_vel", y_vel),
            Channel::new("speed", speed),
            Channel::new("tangent_angle", angle),
            Channel::new("tangent_cos", cos_a),
            Channel::new("tangent_sin", sin_a),
            Channel::new(PRESSURE_CHANNEL, pressure),
            Channel::new("speed_rate", speed_rate),
            Channel::new("angle_rate", angle_rate),
            Channel::new("log_curvature_radius", log_curv),
            Channel::new("centripetal_accel", centripetal),
            Channel::new("total_accel", total_accel),
        ],
        h,
    )
}

/// Compact channel set: raw positions, speed, pressure rate, speed rate,
/// tangent-angle rate, a windowed min/max speed ratio, and the stroke angle's
/// rate and cosine.
///
/// Captures without pressure drop the pressure-rate channel, yielding 8
/// channels instead of 9. The speed window skips sample 0 (whose speed is a
/// synthetic zero under the backward-difference convention) and spans the
/// current and up to four preceding samples; the window maximum is floored at
/// 1e-8.
pub fn extract_sig9<T: Real>(sig: &RawSignature<T>) -> Result<TimeFunctionMatrix<T>> {
    require_len(sig, 3)?;
    let h = sample_period_of(sig)?;
    let eps = real::<T>(EPS);

    let xs = sig.xs();
    let ys = sig.ys();
    let x_vel = derivative(&xs, h)?;
    let y_vel = derivative(&ys, h)?;
    let speed: Vec<T> = x_vel
        .iter()
        .zip(&y_vel)
        .map(|(&vx, &vy)| (vx * vx + vy * vy).sqrt())
        .collect();
    let speed_rate = derivative(&speed, h)?;
    let angle_rate = derivative(&tangent_angle(&x_vel, &y_vel), h)?;

    let mut window_ratio = Vec::with_capacity(sig.len());
    window_ratio.push(T::one());
    for n in 1..sig.len() {
        let start = n.saturating_sub(4).max(1);
        let window = &speed[start..=n];
        let min = window.iter().copied().fold(T::infinity(), T::min);
        let max = window.iter().copied().fold(T::neg_infinity(), T::max);
        window_ratio.push(min / max.max(eps));
    }

    // Stroke angle: direction between consecutive raw samples, carrying
    // forward across zero displacement.
    let mut stroke_angle = Vec::with_capacity(sig.len());
    stroke_angle.push(T::zero());
    for n in 1..sig.len() {
        let dx = xs[n] - xs[n - 1];
        let dy = ys[n] - ys[n - 1];
        let angle = if dx == T::zero() && dy == T::zero() {
            stroke_angle[n - 1]
        } else {
            dy.atan2(dx)
        };
        stroke_angle.push(angle);
    }
    let stroke_angle_rate = derivative(&stroke_angle, h)?;
    let stroke_angle_cos: Vec<T> = stroke_angle.iter().map(|&a| a.cos()).collect();

    let mut channels = vec![
        Channel::new("x", xs),
        Channel::new("y", ys),
        Channel::new("speed", speed),
    ];
    if let Some(ps) = sig.ps() {
        channels.push(Channel::new("pressure_rate", derivative(&ps, h)?));
    }
    channels.extend([
        Channel::new("speed_rate", speed_rate),
        Channel::new("angle_rate", angle_rate),
        Channel::new("speed_window_ratio", window_ratio),
        Channel::new("stroke_angle_rate", stroke_angle_rate),
        Channel::new("stroke_angle_cos", stroke_angle_cos),
    ]);
    TimeFunctionMatrix::new(channels, h)
}

/// Position channels with their first and second discrete derivatives:
/// x, y, ẋ, ẏ, ẍ, ÿ.
pub fn extract_baseline<T: Real>(sig: &RawSignature<T>) -> Result<TimeFunctionMatrix<T>> {
    require_len(sig, 3)?;
    let h = sample_period_of(sig)?;
    let xs = sig.xs();
    let ys = sig.ys();
    let x_vel = derivative(&xs, h)?;
    let y_vel = derivative(&ys, h)?;
    let x_accel = derivative(&x_vel, h)?;
    let y_accel = derivative(&y_vel, h)?;
    TimeFunctionMatrix::new(
        vec![
            Channel::new("x", xs),
            Channel::new("y", ys),
            Channel::new("x_vel", x_vel),
            Channel::new("y_vel", y_vel),
            Channel::new("x_accel", x_accel),
            Channel::new("y_accel", y_accel),
        ],
        h,
    )
}

fn median<T: Real>(values: &[T]) -> T {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values are totally ordered"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / real(2.0)
    }
}

/// Population moments: (mean, std, skewness). A constant series has zero
/// skewness by convention.
fn moments<T: Real>(values: &[T]) -> (T, T, T) {
    let n = from_count::<T>(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    let m2 = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    let m3 = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean) * (v - mean))
        / n;
    let std = m2.sqrt();
    let skew = if m2 < T::min_positive_value() {
        T::zero()
    } else {
        m3 / (m2 * std)
    };
    (mean, std, skew)
}

/// Thirteen global statistics of the coordinate distributions: sample count,
/// sign fractions, mean, median, standard deviation, and skewness of x and y.
///
/// Intended to run after `scale_center(Sym11)`, which centers the data so the
/// sign fractions are informative. Fractions are reported in [0, 1].
pub fn extract_mad13<T: Real>(sig: &RawSignature<T>) -> Result<GlobalFeatureVector<T>> {
    let n = from_count::<T>(sig.len());
    let xs = sig.xs();
    let ys = sig.ys();
    let frac = |values: &[T], pos: bool| -> T {
        let count = values
            .iter()
            .filter(|&&v| if pos { v > T::zero() } else { v < T::zero() })
            .count();
        from_count::<T>(count) / n
    };
    let (mean_x, std_x, skew_x) = moments(&xs);
    let (mean_y, std_y, skew_y) = moments(&ys);
    GlobalFeatureVector::new(vec![
        ("num_samples".to_string(), n),
        ("frac_x_positive".to_string(), frac(&xs, true)),
        ("frac_x_negative".to_string(), frac(&xs, false)),
        ("frac_y_positive".to_string(), frac(&ys, true)),
        ("frac_y_negative".to_string(), frac(&ys, false)),
        ("mean_x".to_string(), mean_x),
        ("mean_y".to_string(), mean_y),
        ("median_x".to_string(), median(&xs)),
        ("median_y".to_string(), median(&ys)),
        ("std_x".to_string(), std_x),
        ("std_y".to_string(), std_y),
        ("skew_x".to_string(), skew_x),
        ("skew_y".to_string(), skew_y),
    ])
}

/// Entrywise absolute difference of two feature vectors with identical name
/// lists.
pub fn feature_diff<T: Real>(
    f_enrolled: &GlobalFeatureVector<T>,
    f_test: &GlobalFeatureVector<T>,
) -> Result<GlobalFeatureVector<T>> {
    if !f_enrolled.names().eq(f_test.names()) {
        return Err(Error::validation(
            "feature vectors carry different name lists".to_string(),
        ));
    }
    let entries = f_enrolled
        .iter()
        .zip(f_test.values())
        .map(|((name, a), b)| (name.to_string(), (a - b).abs()))
        .collect();
    GlobalFeatureVector::new(entries)
}

/// Maximum supported truncation depth for [`path_signature`]. Level k adds
/// d^k coefficients, so deeper truncations explode combinatorially.
pub const MAX_SIGNATURE_DEPTH: usize = 4;

/// Total coefficient count of a depth-truncated signature in d dimensions:
/// d + d² + … + d^depth.
pub fn signature_dim(d: usize, depth: usize) -> usize {
    let mut total = 0;
    let mut level = 1;
    for _ in 0..depth {
        level *= d;
        total += level;
    }
    total
}

/// Signature of a single linear segment with displacement `delta`:
/// level k is delta^{⊗k} / k!.
fn segment_signature<T: Real>(delta: &[T], depth: usize) -> Vec<Vec<T>> {
    let mut levels: Vec<Vec<T>> = Vec::with_capacity(depth);
    levels.push(delta.to_vec());
    for k in 2..=depth {
        let prev = &levels[k - 2];
        let factor = T::one() / from_count::<T>(k);
        let mut next = Vec::with_capacity(prev.len() * delta.len());
        for &a in prev {
            for &dv in delta {
                next.push(a * dv * factor);
            }
        }
        levels.push(next);
    }
    levels
}

/// Chen concatenation: the signature of a concatenated path is the truncated
/// tensor product of the parts (level-0 terms are the implicit 1).
fn chen_product<T: Real>(a: &[Vec<T>], b: &[Vec<T>], depth: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(depth);
    for l in 1..=depth {
        let mut level: Vec<T> = a[l - 1].clone();
        for (li, bi) in level.iter_mut().zip(&b[l - 1]) {
            *li = *li + *bi;
        }
        for i in 1..l {
            let j = l - i;
            let (ai, bj) = (&a[i - 1], &b[j - 1]);
            let stride = bj.len();
            for (ia, &va) in ai.iter().enumerate() {
                for (ib, &vb) in bj.iter().enumerate() {
                    level[ia * stride + ib] = level[ia * stride + ib] + va * vb;
                }
            }
        }
        out.push(level);
    }
    out
}

/// Truncated path signature of a piecewise-linear path.
///
/// `path` is a sequence of N points in d dimensions; the result concatenates
/// the iterated-integral coefficients of levels 1..=depth (dimension
/// d + d² + … + d^depth, row-major within each level).
pub fn path_signature<T: Real>(path: &[Vec<T>], depth: usize) -> Result<Vec<T>> {
    if depth == 0 {
        return Err(Error::validation("depth must be at least 1".to_string()));
    }
    if depth > MAX_SIGNATURE_DEPTH {
        return Err(Error::UnsupportedDepth(depth));
    }
    if path.len() < 2 {
        return Err(Error::TooShort {
            len: path.len(),
            min: 2,
        });
    }
    let d = path[0].len();
    if d == 0 {
        return Err(Error::validation("points must have at least 1 dimension".to_string()));
    }
    for (i, point) in path.iter().enumerate() {
        if point.len() != d {
            return Err(Error::validation(format!(
                "point {i} has {} dimensions, expected {d}",
                point.len()
            )));
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("point {i} contains a non-finite value")));
        }
    }

    let delta = |k: usize| -> Vec<T> {
        (0..d).map(|c| path[k + 1][c] - path[k][c]).collect()
    };
    let mut acc = segment_signature(&delta(0), depth);
    for k in 1..path.len() - 1 {
        let seg = segment_signature(&delta(k), depth);
        acc = chen_product(&acc, &seg, depth);
    }
    Ok(acc.into_iter().flatten().collect())
}

/// Builds the path-signature input channels from a signature — positions,
/// their first derivatives, pressure when present, and optionally the
/// perpendicular of the velocity — then returns named signature coefficients.
///
/// Entry names are `pathsig_l<level>_<index>` with row-major indices inside
/// each level.
pub fn path_signature_features<T: Real>(
    sig: &RawSignature<T>,
    depth: usize,
    include_perpendicular: bool,
) -> Result<GlobalFeatureVector<T>> {
    require_len(sig, 3)?;
    let h = sample_period_of(sig)?;
    let xs = sig.xs();
    let ys = sig.ys();
    let x_vel = derivative(&xs, h)?;
    let y_vel = derivative(&ys, h)?;
    let ps = sig.ps();

    let mut path: Vec<Vec<T>> = Vec::with_capacity(sig.len());
    for i in 0..sig.len() {
        let mut point = vec![xs[i], ys[i], x_vel[i], y_vel[i]];
        if let Some(ps) = &ps {
            point.push(ps[i]);
        }
        if include_perpendicular {
            point.push(-y_vel[i]);
            point.push(x_vel[i]);
        }
        path.push(point);
    }
    let d = path[0].len();
    let coeffs = path_signature(&path, depth)?;

    let mut entries = Vec::with_capacity(coeffs.len());
    let mut level = 1;
    let mut level_len = d;
    let mut offset = 0;
    for (i, &c) in coeffs.iter().enumerate() {
        if i - offset == level_len {
            offset = i;
            level += 1;
            level_len *= d;
        }
        entries.push((format!("pathsig_l{level}_{}", i - offset), c));
    }
    GlobalFeatureVector::new(entries)
}

/// Renders feature vectors as CSV: header row of names, one row per vector.
/// All vectors must share the same name list.
pub fn features_to_csv<T: Real>(rows: &[GlobalFeatureVector<T>]) -> Result<String> {
    let first = rows
        .first()
        .ok_or_else(|| Error::validation("no feature vectors to export".to_string()))?;
    let mut out = String::new();
    for (i, name) in first.names().enumerate() {
        if name.contains(',') {
            return Err(Error::validation(format!("feature name '{name}' contains a comma")));
        }
        if i > 0 {
            out.push(',');
        }
        out.push_str(name);
    }
    out.push('\n');
    for (ri, row) in rows.iter().enumerate() {
        if !row.names().eq(first.names()) {
            return Err(Error::validation(format!(
                "feature vector {ri} carries a different name list"
            )));
        }
        let mut sep = "";
        for v in row.values() {
            out.push_str(sep);
            out.push_str(&format!("{v}"));
            sep = ",";
        }
        out.push('\n');
    }
    Ok(out)
}
