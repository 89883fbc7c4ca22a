//! Executes a [`PipelineConfig`] over signatures: preprocessing, feature
//! extraction, matching, and score mapping.
//!
//! Each signature is prepared (preprocessed + all extractor branches) exactly
//! once, then every comparison pair is scored independently. Scoring fans out
//! over a rayon pool; results are collected by input index, so the score
//! stream is a pure function of (signatures, config) regardless of worker
//! count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use sigbench::alignment::{dtw, soft_dtw};
use sigbench::features::{extract_baseline, extract_dlvc12, extract_sig9, TimeFunctionMatrix};
use sigbench::ingest::RawSignature;
use sigbench::preprocess::{drop_zero_pressure, resample_uniform, scale_center, znorm_channels};
use sigbench::scoring::{fuse_weighted, sigstat_global_score, sigstat_local_score, tanh_normalize};

use crate::config::{ExtractorKind, MatcherKind, PipelineConfig, PreprocessStep, ThresholdScorer};
use crate::{Error, Result};

/// A signature pushed through preprocessing and every extractor branch,
/// ready to be matched against any other prepared signature.
#[derive(Debug, Clone)]
pub struct PreparedSignature {
    pub id: String,
    branches: Vec<TimeFunctionMatrix<f64>>,
}

/// Builds a rayon pool with `workers` threads; `0` means the rayon default.
pub fn make_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("could not start {workers} workers: {e}")))
}

/// Preprocesses one signature and runs every extractor branch.
pub fn prepare(sig: &RawSignature<f64>, cfg: &PipelineConfig) -> Result<PreparedSignature> {
    let wrap = |e: sigbench::Error| Error::invalid(format!("signature '{}': {e}", sig.id));
    let mut current = sig.clone();
    for step in &cfg.preprocess_steps {
        current = match step {
            PreprocessStep::Resample => resample_uniform(&current, cfg.resample_hz),
            PreprocessStep::DropZeroPressure => drop_zero_pressure(&current),
            PreprocessStep::ScaleCenter => scale_center(&current, cfg.scale_target),
        }
        .map_err(wrap)?;
    }
    let mut branches = Vec::with_capacity(cfg.extractors.len());
    for extractor in &cfg.extractors {
        let tfm = match extractor {
            ExtractorKind::Baseline => extract_baseline(&current),
            ExtractorKind::Dlvc12 => extract_dlvc12(&current),
            ExtractorKind::Sig9 => extract_sig9(&current),
        }
        .map_err(wrap)?;
        branches.push(if cfg.znorm {
            znorm_channels(&tfm, cfg.pressure_policy)
        } else {
            tfm
        });
    }
    Ok(PreparedSignature {
        id: sig.id.clone(),
        branches,
    })
}

fn branch_distance(
    a: &TimeFunctionMatrix<f64>,
    b: &TimeFunctionMatrix<f64>,
    cfg: &PipelineConfig,
) -> sigbench::Result<f64> {
    match cfg.matcher {
        MatcherKind::Dtw => {
            let result = dtw(a, b, cfg.metric)?;
            Ok(if cfg.normalize {
                result.normalized_score
            } else {
                result.cumulative_cost
            })
        }
        MatcherKind::SoftDtw => {
            let value = soft_dtw(a, b, cfg.gamma, cfg.metric)?;
            Ok(if cfg.normalize {
                value / (a.len() + b.len()) as f64
            } else {
                value
            })
        }
    }
}

/// Scores one prepared pair: per-branch matcher distances, weighted fusion,
/// then the optional normalization and threshold-scorer stages.
pub fn pair_score(
    a: &PreparedSignature,
    b: &PreparedSignature,
    cfg: &PipelineConfig,
) -> Result<f64> {
    let wrap = |e: sigbench::Error| {
        Error::invalid(format!("comparing '{}' with '{}': {e}", a.id, b.id))
    };
    let mut distances = Vec::with_capacity(a.branches.len());
    for (ba, bb) in a.branches.iter().zip(&b.branches) {
        distances.push(branch_distance(ba, bb, cfg).map_err(wrap)?);
    }
    let mut score = fuse_weighted(&distances, &cfg.weights).map_err(wrap)?;
    if let Some((mu, sigma)) = cfg.tanh {
        score = tanh_normalize(&[score], mu, sigma).map_err(wrap)?[0];
    }
    match cfg.threshold {
        ThresholdScorer::None => Ok(score),
        ThresholdScorer::SigstatLocal { g_th, f_th, s } => {
            sigstat_local_score(score, g_th, f_th, s).map_err(wrap)
        }
        ThresholdScorer::SigstatGlobal { d_g_min, d_f_med } => {
            sigstat_global_score(score, d_g_min, d_f_med).map_err(wrap)
        }
    }
}

/// Prepares every signature in parallel, keyed by id.
pub fn prepare_corpus(
    cfg: &PipelineConfig,
    signatures: &BTreeMap<String, RawSignature<f64>>,
    pool: &rayon::ThreadPool,
) -> Result<BTreeMap<String, PreparedSignature>> {
    let prepared: Vec<(String, PreparedSignature)> = pool.install(|| {
        signatures
            .par_iter()
            .map(|(id, sig)| Ok((id.clone(), prepare(sig, cfg)?)))
            .collect::<Result<_>>()
    })?;
    Ok(prepared.into_iter().collect())
}

/// Scores `(reference_id, probe_id)` pairs in input order. Every id must be
/// present in `prepared`; resolve ids against the manifest before calling.
pub fn score_pairs(
    cfg: &PipelineConfig,
    prepared: &BTreeMap<String, PreparedSignature>,
    pairs: &[(String, String)],
    pool: &rayon::ThreadPool,
) -> Result<Vec<f64>> {
    pool.install(|| {
        pairs
            .par_iter()
            .map(|(reference, probe)| {
                let a = prepared
                    .get(reference)
                    .ok_or_else(|| Error::invalid(format!("unknown signature id '{reference}'")))?;
                let b = prepared
                    .get(probe)
                    .ok_or_else(|| Error::invalid(format!("unknown signature id '{probe}'")))?;
                pair_score(a, b, cfg)
            })
            .collect()
    })
}
