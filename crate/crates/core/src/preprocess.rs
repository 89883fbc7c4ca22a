//! Signal conditioning applied before feature extraction: uniform
//! resampling, per-channel z-normalization, zero-pressure removal, and
//! coordinate scaling.

use crate::error::{Error, Result};
use crate::features::{Channel, TimeFunctionMatrix, PRESSURE_CHANNEL};
use crate::ingest::{RawSignature, SignaturePoint};
use crate::scalar::{from_count, real, Real};

/// Default resampling rate in Hz.
pub const DEFAULT_RESAMPLE_HZ: f64 = 100.0;

/// How [`znorm_channels`] treats the pressure channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressurePolicy {
    /// Normalize pressure like any other channel.
    AsIs,
    /// Replace the pressure channel with a constant 1.0, for captures whose
    /// device reports no meaningful pressure.
    ConstantOne,
}

impl PressurePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PressurePolicy::AsIs => "as_is",
            PressurePolicy::ConstantOne => "constant_one",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "as_is" => Ok(PressurePolicy::AsIs),
            "constant_one" => Ok(PressurePolicy::ConstantOne),
            other => Err(Error::validation(format!("unknown pressure policy '{other}'"))),
        }
    }
}

impl std::fmt::Display for PressurePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coordinate range for [`scale_center`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleTarget {
    /// x, y, p to [0, 1]; x and y then shifted to zero mean.
    Unit01,
    /// x, y to [-1, 1] and p to [0, 1]; a constant-one pressure channel is
    /// synthesized when the capture carries none.
    Sym11,
}

impl ScaleTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            ScaleTarget::Unit01 => "unit_01",
            ScaleTarget::Sym11 => "sym_11",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "unit_01" => Ok(ScaleTarget::Unit01),
            "sym_11" => Ok(ScaleTarget::Sym11),
            other => Err(Error::validation(format!("unknown scale target '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScaleTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Resamples a signature to an exactly uniform grid at `target_hz`.
///
/// Output timestamps are `k * 1000 / target_hz` for `k = 0..` up to the
/// original final timestamp. x, y, and pressure are linearly interpolated;
/// the pen flag is taken from the nearest earlier original sample. Grid
/// points that coincide with an original timestamp copy that sample's fields
/// exactly, so resampling an already-uniform signature at its own rate is the
/// identity.
pub fn resample_uniform<T: Real>(sig: &RawSignature<T>, target_hz: T) -> Result<RawSignature<T>> {
    if target_hz <= T::zero() || !target_hz.is_finite() {
        return Err(Error::validation("target rate must be positive".to_string()));
    }
    let duration = sig.duration();
    if duration <= T::zero() {
        return Err(Error::DegenerateDuration);
    }
    let dt = real::<T>(1000.0) / target_hz;
    // The epsilon absorbs float error in duration/dt when the duration is an
    // exact multiple of the step.
    let steps = (duration / dt + real(1e-9)).floor();
    let count = steps
        .to_usize()
        .ok_or_else(|| Error::validation("resampled grid does not fit in memory".to_string()))?
        + 1;
    if count < 2 {
        return Err(Error::validation(format!(
            "target rate {target_hz} Hz yields fewer than 2 samples over {duration} ms"
        )));
    }

    let ts = sig.ts();
    let mut points: Vec<SignaturePoint<T>> = Vec::with_capacity(count);
    for k in 0..count {
        let t = from_count::<T>(k) * dt;
        // Last original index with timestamp <= t. Duplicate timestamps
        // collapse to the latest sample, which also supplies the pen flag.
        let hi = ts.partition_point(|&v| v <= t);
        let lo = hi.saturating_sub(1);
        let pt = if ts[lo] == t || hi == ts.len() {
            let src = &sig.points[lo];
            SignaturePoint {
                x: src.x,
                y: src.y,
                t,
                p: src.p,
                pen_down: src.pen_down,
            }
        } else {
            let (a, b) = (&sig.points[lo], &sig.points[hi]);
            let frac = (t - a.t) / (b.t - a.t);
            SignaturePoint {
                x: a.x + frac * (b.x - a.x),
                y: a.y + frac * (b.y - a.y),
                t,
                p: a.p.map(|pa| pa + frac * (b.p.unwrap() - pa)),
                pen_down: a.pen_down,
            }
        };
        points.push(pt);
    }
    RawSignature::new(sig.id.clone(), points, sig.meta())
}

/// Z-normalizes every channel to zero mean and unit population variance.
///
/// Channels with zero variance become all zeros. Under
/// [`PressurePolicy::ConstantOne`] the pressure channel is instead set to a
/// constant 1.0.
pub fn znorm_channels<T: Real>(
    tfm: &TimeFunctionMatrix<T>,
    pressure_policy: PressurePolicy,
) -> TimeFunctionMatrix<T> {
    let n = from_count::<T>(tfm.len());
    let channels = tfm
        .channels()
        .iter()
        .map(|ch| {
            if ch.name == PRESSURE_CHANNEL && pressure_policy == PressurePolicy::ConstantOne {
                return Channel {
                    name: ch.name.clone(),
                    values: vec![T::one(); ch.values.len()],
                };
            }
            let mean = ch.values.iter().fold(T::zero(), |a, &v| a + v) / n;
            let var = ch
                .values
                .iter()
                .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
                / n;
            let values = if var < T::min_positive_value() {
                vec![T::zero(); ch.values.len()]
            } else {
                let std = var.sqrt();
                ch.values.iter().map(|&v| (v - mean) / std).collect()
            };
            Channel {
                name: ch.name.clone(),
                values,
            }
        })
        .collect();
    TimeFunctionMatrix::new(channels, tfm.sample_period())
        .expect("z-normalized channels stay finite and aligned")
}

/// Removes samples with zero pressure.
///
/// Timestamps of the retained samples are preserved; order is unchanged.
pub fn drop_zero_pressure<T: Real>(sig: &RawSignature<T>) -> Result<RawSignature<T>> {
    if !sig.has_pressure() {
        return Err(Error::validation(format!(
            "signature '{}' carries no pressure channel",
            sig.id
        )));
    }
    let points: Vec<SignaturePoint<T>> = sig
        .points
        .iter()
        .filter(|pt| pt.p.unwrap() > T::zero())
        .copied()
        .collect();
    if points.is_empty() {
        return Err(Error::EmptySignature(format!(
            "signature '{}' has no samples with positive pressure",
            sig.id
        )));
    }
    if points.len() < 2 {
        return Err(Error::validation(format!(
            "signature '{}' has fewer than 2 samples with positive pressure",
            sig.id
        )));
    }
    RawSignature::new(sig.id.clone(), points, sig.meta())
}

/// Min-max scales coordinates (and pressure) and centers them per
/// [`ScaleTarget`].
///
/// A constant pressure channel maps to all ones under both targets, since
/// min-max scaling is undefined there and a flat positive pressure carries no
/// information. Timestamps and pen flags pass through unchanged.
pub fn scale_center<T: Real>(sig: &RawSignature<T>, target: ScaleTarget) -> Result<RawSignature<T>> {
    let range = |values: &[T], axis: &str| -> Result<(T, T)> {
        let min = values.iter().copied().fold(T::infinity(), T::min);
        let max = values.iter().copied().fold(T::neg_infinity(), T::max);
        if max - min <= T::zero() {
            return Err(Error::DegenerateGeometry(format!(
                "signature '{}': {axis} range is zero",
                sig.id
            )));
        }
        Ok((min, max - min))
    };
    let xs = sig.xs();
    let ys = sig.ys();
    let (x_min, x_span) = range(&xs, "x")?;
    let (y_min, y_span) = range(&ys, "y")?;

    let scale_01 = |v: T, min: T, span: T| (v - min) / span;
    let scale_11 = |v: T, min: T, span: T| real::<T>(2.0) * (v - min) / span - T::one();

    let n = from_count::<T>(sig.len());
    let mut new_x: Vec<T>;
    let mut new_y: Vec<T>;
    match target {
        ScaleTarget::Unit01 => {
            new_x = xs.iter().map(|&v| scale_01(v, x_min, x_span)).collect();
            new_y = ys.iter().map(|&v| scale_01(v, y_min, y_span)).collect();
            let mx = new_x.iter().fold(T::zero(), |a, &v| a + v) / n;
            let my = new_y.iter().fold(T::zero(), |a, &v| a + v) / n;
            for v in &mut new_x {
                *v = *v - mx;
            }
            for v in &mut new_y {
                *v = *v - my;
            }
        }
        ScaleTarget::Sym11 => {
            new_x = xs.iter().map(|&v| scale_11(v, x_min, x_span)).collect();
            new_y = ys.iter().map(|&v| scale_11(v, y_min, y_span)).collect();
        }
    }

    let new_p: Option<Vec<T>> = match sig.ps() {
        Some(ps) => {
            let min = ps.iter().copied().fold(T::infinity(), T::min);
            let max = ps.iter().copied().fold(T::neg_infinity(), T::max);
            let span = max - min;
            if span <= T::zero() {
                Some(vec![T::one(); ps.len()])
            } else {
                Some(ps.iter().map(|&v| (v - min) / span).collect())
            }
        }
        None => match target {
            ScaleTarget::Sym11 => Some(vec![T::one(); sig.len()]),
            ScaleTarget::Unit01 => None,
        },
    };

    let points: Vec<SignaturePoint<T>> = sig
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| SignaturePoint {
            x: new_x[i],
            y: new_y[i],
            t: pt.t,
            p: new_p.as_ref().map(|ps| ps[i]),
            pen_down: pt.pen_down,
        })
        .collect();
    RawSignature::new(sig.id.clone(), points, sig.meta())
}
