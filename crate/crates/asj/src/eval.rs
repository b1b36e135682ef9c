//! Evaluation protocols written as CSV: one row per trial and measurement,
//! then summary rows. Columns are `protocol,trial,parameter,metric,value`,
//! with `trial` set to `summary` on the summary rows.

use std::io::Write;
use std::str::FromStr;

use anyhow::Context;
use asj_core::eval::scene::{self, random_warp, random_wireframe_spec, warp_spec, SceneSpec};
use asj_core::eval::{
    false_alarm_counts, gen_matching_pair, gen_noise_image, gen_wireframe_scene, match_metrics, repeatability,
    CorrespondenceCriteria, SyntheticScene,
};
use asj_core::matching::{decompose_all, match_junctions};
use asj_core::scale::detect_asj;

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Noise,
    Repeatability,
    Matching,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("unknown protocol {0:?}, expected noise, repeatability or matching")]
pub struct UnknownProtocol(pub String);

impl FromStr for Protocol {
    type Err = UnknownProtocol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noise" => Ok(Self::Noise),
            "repeatability" => Ok(Self::Repeatability),
            "matching" => Ok(Self::Matching),
            other => Err(UnknownProtocol(other.to_string())),
        }
    }
}

impl Protocol {
    fn name(self) -> &'static str {
        match self {
            Self::Noise => "noise",
            Self::Repeatability => "repeatability",
            Self::Matching => "matching",
        }
    }
}

/// The scale factors of the repeatability sweep.
pub const SCALE_FACTORS: [f64; 8] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub trials: usize,
    /// Side of the square noise images.
    pub size: usize,
    /// Noise protocol thresholds; the run's epsilon when empty.
    pub epsilons: Vec<f64>,
    pub factors: Vec<f64>,
    /// Pixel noise of generated scenes.
    pub noise_sigma: f64,
    /// Fixed scene, in place of seeded random ones.
    pub scene: Option<(SceneSpec, Option<u64>)>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            size: 256,
            epsilons: Vec::new(),
            factors: SCALE_FACTORS.to_vec(),
            noise_sigma: 0.0,
            scene: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub trial: Option<usize>,
    pub parameter: String,
    pub metric: &'static str,
    pub value: f64,
}

fn row(trial: Option<usize>, parameter: impl ToString, metric: &'static str, value: f64) -> Row {
    Row { trial, parameter: parameter.to_string(), metric, value }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn trial_seed(config: &RunConfig, t: usize) -> u64 {
    config.seed.wrapping_add(t as u64)
}

pub fn run(protocol: Protocol, config: &RunConfig, opts: &EvalOptions) -> anyhow::Result<Vec<Row>> {
    match protocol {
        Protocol::Noise => noise(config, opts),
        Protocol::Repeatability => repeatability_sweep(config, opts),
        Protocol::Matching => matching(config, opts),
    }
}

fn noise(config: &RunConfig, opts: &EvalOptions) -> anyhow::Result<Vec<Row>> {
    let eps = if opts.epsilons.is_empty() { vec![config.epsilon] } else { opts.epsilons.clone() };
    let params = config.detect_params();
    let mut counts = Vec::with_capacity(opts.trials);
    let mut rows = Vec::new();
    for t in 0..opts.trials {
        let seed = trial_seed(config, t);
        let img = gen_noise_image(seed, opts.size, opts.size)?.image;
        let c = false_alarm_counts(&img, &eps, seed, &params)?;
        for (e, n) in eps.iter().zip(&c) {
            rows.push(row(Some(t), e, "false_detections", *n as f64));
        }
        counts.push(c);
    }
    for (k, e) in eps.iter().enumerate() {
        rows.push(row(None, e, "mean_false_detections", mean(counts.iter().map(|c| c[k] as f64))));
    }
    Ok(rows)
}

fn scene_for(config: &RunConfig, opts: &EvalOptions, t: usize) -> (SceneSpec, u64) {
    match &opts.scene {
        Some((spec, seed)) => (spec.clone(), seed.unwrap_or(config.seed).wrapping_add(t as u64)),
        None => {
            let seed = trial_seed(config, t);
            (random_wireframe_spec(seed, opts.noise_sigma), seed)
        }
    }
}

fn repeatability_sweep(config: &RunConfig, opts: &EvalOptions) -> anyhow::Result<Vec<Row>> {
    let params = config.detect_params();
    let criteria = CorrespondenceCriteria::default();
    let mut rows = Vec::new();
    let mut rates = vec![Vec::new(); opts.factors.len()];
    for t in 0..opts.trials {
        let (spec, seed) = scene_for(config, opts, t);
        let img = scene::render(&spec, seed)?;
        let det_a = detect_asj(&img, &params)?;
        for (k, &s) in opts.factors.iter().enumerate() {
            let det_b = detect_asj(&img.rescale_bicubic(s)?, &params)?;
            let r = repeatability(&det_a, &det_b, s, &criteria);
            rows.push(row(Some(t), s, "junctions", r.total as f64));
            rows.push(row(Some(t), s, "matched", r.matched as f64));
            rows.push(row(Some(t), s, "rate", r.rate()));
            rows.push(row(Some(t), s, "scale_rate", r.scale_rate()));
            rates[k].push(r.rate());
        }
    }
    for (s, r) in opts.factors.iter().zip(&rates) {
        rows.push(row(None, s, "mean_rate", mean(r.iter().copied())));
    }
    Ok(rows)
}

fn pair_for(config: &RunConfig, opts: &EvalOptions, t: usize) -> anyhow::Result<(SyntheticScene, SyntheticScene)> {
    match &opts.scene {
        Some((spec, seed)) => {
            let seed = seed.unwrap_or(config.seed).wrapping_add(t as u64);
            let map = random_warp(seed, spec.width, spec.height);
            let p = gen_wireframe_scene(spec, seed.wrapping_mul(2).wrapping_add(1))?;
            let mut q = gen_wireframe_scene(&warp_spec(spec, &map), seed.wrapping_mul(2).wrapping_add(2))?;
            q.gt_transform = Some(map);
            Ok((p, q))
        }
        None => Ok(gen_matching_pair(trial_seed(config, t), opts.noise_sigma)?),
    }
}

fn matching(config: &RunConfig, opts: &EvalOptions) -> anyhow::Result<Vec<Row>> {
    let params = config.detect_params();
    let mp = config.match_params();
    let criteria = CorrespondenceCriteria::default();
    let mut rows = Vec::new();
    let (mut correct, mut total) = (0usize, 0usize);
    for t in 0..opts.trials {
        let (p, q) = pair_for(config, opts, t)?;
        let gt = q.gt_transform.context("warped scene carries its map")?;
        let ap = detect_asj(&p.image, &params)?;
        let aq = detect_asj(&q.image, &params)?;
        let pairs = match_junctions(&ap, &aq, &p.image, &q.image, &mp);
        let m = match_metrics(&pairs, &decompose_all(&ap), &decompose_all(&aq), &gt, &criteria);
        rows.push(row(Some(t), "", "matches", m.total as f64));
        rows.push(row(Some(t), "", "correct", m.correct as f64));
        rows.push(row(Some(t), "", "precision", m.precision));
        rows.push(row(Some(t), "", "recall", m.recall));
        correct += m.correct;
        total += m.total;
    }
    let precision = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    rows.push(row(None, "", "precision", precision));
    rows.push(row(None, "", "mean_correct", correct as f64 / opts.trials.max(1) as f64));
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, protocol: Protocol, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["protocol", "trial", "parameter", "metric", "value"])?;
    for r in rows {
        let trial = r.trial.map_or_else(|| "summary".to_string(), |t| t.to_string());
        w.write_record([protocol.name(), &trial, &r.parameter, r.metric, &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use asj_core::eval::scene::Shape;

    #[test]
    fn protocol_names() {
        assert_eq!("noise".parse(), Ok(Protocol::Noise));
        assert_eq!("matching".parse::<Protocol>().map(Protocol::name), Ok("matching"));
        assert!("tables".parse::<Protocol>().is_err());
    }

    #[test]
    fn noise_rows_and_summary() {
        let opts = EvalOptions { trials: 2, size: 32, epsilons: vec![0.1, 10.0], ..Default::default() };
        let rows = run(Protocol::Noise, &RunConfig::default(), &opts).unwrap();
        assert_eq!(rows.len(), 2 * 2 + 2);
        let summary: Vec<&Row> = rows.iter().filter(|r| r.trial.is_none()).collect();
        assert_eq!(summary[1].parameter, "10");
        let expect = mean(rows.iter().filter(|r| r.trial.is_some() && r.parameter == "10").map(|r| r.value));
        assert_eq!(summary[1].value, expect);
        assert_eq!(rows, run(Protocol::Noise, &RunConfig::default(), &opts).unwrap());
    }

    #[test]
    fn repeatability_is_one_at_unit_scale() {
        let mut spec = SceneSpec::new(120, 100);
        spec.shapes.push(Shape::Rectangle { center: (60.0, 50.0), width: 70.0, height: 50.0, angle: 0.0 });
        let opts = EvalOptions { trials: 1, factors: vec![1.0, 0.7], scene: Some((spec, Some(3))), ..Default::default() };
        let rows = run(Protocol::Repeatability, &RunConfig::default(), &opts).unwrap();
        let rates: Vec<&Row> = rows.iter().filter(|r| r.metric == "mean_rate").collect();
        assert_eq!(rates.len(), 2);
        assert_eq!(rates[0].value, 1.0);
        let mut buf = Vec::new();
        write_csv(&mut buf, Protocol::Repeatability, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("protocol,trial,parameter,metric,value\nrepeatability,0,1,junctions,"));
        assert!(text.contains("repeatability,summary,1,mean_rate,1\n"));
    }
}
