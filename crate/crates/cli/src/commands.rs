//! The commands behind the binary. Each returns the tables it produced so
//! the caller decides where they go.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use softqec::decoding_graph::{DecodingGraph, GraphOptions};
use softqec::montecarlo::{fit_threshold, rows, sweep_with, to_csv, CurvePoint, DecoderKind, PointRecord, Row, ThresholdFit};
use softqec::noise_models::{GraphicalModel, Violation};
use softqec::soft_measurement::{SoftFamily, SoftModel};
use softqec::validation::{
    check_posterior_weights, check_syndrome_boundary, import_model_file, ks_distance, simulate_readout,
};

use crate::config::{ExperimentConfig, NoiseConfig, Rounds};
use crate::CliError;

/// Tables and summary lines of a finished command.
#[derive(Debug, Clone)]
pub struct Output {
    pub csv: String,
    pub json: Value,
    pub summary: Vec<String>,
    /// Set when the command ran but a check or fit failed.
    pub failed: bool,
    pub records: Vec<PointRecord>,
    /// Threshold fits by decoder name.
    pub fits: BTreeMap<String, ThresholdFit>,
    pub tradeoff: Vec<TradeoffSummary>,
}

impl Output {
    fn new(csv: String, json: Value, summary: Vec<String>, records: Vec<PointRecord>) -> Output {
        Output { csv, json, summary, failed: false, records, fits: BTreeMap::new(), tradeoff: Vec::new() }
    }
}

fn run_sweep(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Result<Vec<PointRecord>, CliError> {
    let plan = cfg.plan()?;
    let total = plan.points.len();
    let recs = sweep_with(&plan, |i, r| {
        progress(&format!(
            "[{}/{total}] d={} T={} {}={} {}: fail {:.4e} (X {}, Z {} of {})",
            i + 1,
            r.spec.d,
            r.spec.rounds,
            r.spec.param_name,
            r.spec.param,
            r.spec.decoder.name(),
            r.result.any.mean,
            r.result.x.k,
            r.result.z.k,
            r.result.x.n
        ))
    })?;
    Ok(recs)
}

fn tables(recs: &[PointRecord]) -> (String, Vec<Row>) {
    let r = rows(recs);
    (to_csv(&r), r)
}

/// Failure curves of one decoder, using failures of either type.
pub fn curve_points(recs: &[PointRecord], decoder: DecoderKind) -> Vec<CurvePoint> {
    recs.iter().filter(|r| r.spec.decoder == decoder).map(|r| CurvePoint::from_stats(r.spec.d, r.spec.param, &r.result.any)).collect()
}

/// Sweep and fit a threshold per decoder.
pub fn threshold(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Result<Output, CliError> {
    if cfg.distances.len() < 3 || cfg.scan()?.len() < 4 {
        return Err(CliError::Config("a threshold fit needs at least 3 distances and 4 scanned values".into()));
    }
    let recs = run_sweep(cfg, progress)?;
    let (csv, rows) = tables(&recs);
    let mut fits = BTreeMap::new();
    let mut fit_json = BTreeMap::new();
    let mut summary = Vec::new();
    let mut failed = false;
    for &dec in &cfg.decoders {
        match fit_threshold(&curve_points(&recs, dec), cfg.bootstrap, cfg.seed) {
            Ok(f) => {
                summary.push(format!("{}: p* = {:.5e} +- {:.1e}, nu = {:.3} +- {:.2}", dec.name(), f.p_star, f.p_star_err, f.nu, f.nu_err));
                fit_json.insert(dec.name().to_string(), serde_json::to_value(&f).unwrap_or(Value::Null));
                fits.insert(dec.name().to_string(), f);
            }
            Err(e) => {
                failed = true;
                summary.push(format!("{}: fit failed: {e}", dec.name()));
                fit_json.insert(dec.name().to_string(), json!({ "error": e.to_string() }));
            }
        }
    }
    let json = json!({ "command": "threshold", "config": cfg, "rows": rows, "fits": fit_json });
    Ok(Output { failed, fits, ..Output::new(csv, json, summary, recs) })
}

/// Sweep without a fit.
pub fn curve(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Result<Output, CliError> {
    let recs = run_sweep(cfg, progress)?;
    let (csv, rows) = tables(&recs);
    let summary = recs
        .iter()
        .map(|r| {
            let pb = softqec::montecarlo::rate_per_round(r.result.x.mean, r.spec.rounds).ok();
            format!(
                "d={} T={} {}={} {}: fail {:.4e}, X fail {:.4e}, p_bar {}",
                r.spec.d,
                r.spec.rounds,
                r.spec.param_name,
                r.spec.param,
                r.spec.decoder.name(),
                r.result.any.mean,
                r.result.x.mean,
                pb.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into())
            )
        })
        .collect();
    let json = json!({ "command": "curve", "config": cfg, "rows": rows });
    Ok(Output::new(csv, json, summary, recs))
}

/// Per-distance summary of a measurement-time scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffSummary {
    pub d: usize,
    pub rounds: usize,
    pub decoder: DecoderKind,
    /// Scanned measurement time with the lowest logical error rate per round.
    pub tau_m_best: f64,
    pub p_bar_best: f64,
    pub tau_m_flip_opt: Option<f64>,
    pub p_bar_at_flip_opt: Option<f64>,
    /// Whether the lowest rate lies strictly inside the scanned range.
    pub interior_minimum: bool,
}

pub fn tradeoff_summaries(recs: &[PointRecord], flip_opt: Option<f64>) -> Vec<TradeoffSummary> {
    let mut groups: BTreeMap<(usize, usize, &'static str), Vec<&PointRecord>> = BTreeMap::new();
    for r in recs {
        groups.entry((r.spec.d, r.spec.rounds, r.spec.decoder.name())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((d, rounds, _), mut g) in groups {
        g.sort_by(|a, b| a.spec.param.total_cmp(&b.spec.param));
        let pb: Vec<f64> = g.iter().map(|r| softqec::montecarlo::rate_per_round(r.result.x.mean, rounds).unwrap_or(1.0)).collect();
        let best = (0..pb.len()).min_by(|&i, &j| pb[i].total_cmp(&pb[j])).unwrap_or(0);
        let at_opt = flip_opt.and_then(|t| g.iter().position(|r| r.spec.param == t)).map(|i| pb[i]);
        out.push(TradeoffSummary {
            d,
            rounds,
            decoder: g[0].spec.decoder,
            tau_m_best: g[best].spec.param,
            p_bar_best: pb[best],
            tau_m_flip_opt: flip_opt,
            p_bar_at_flip_opt: at_opt,
            interior_minimum: best > 0 && best + 1 < pb.len() && pb[best] < pb[0] && pb[best] < pb[pb.len() - 1],
        });
    }
    out
}

/// Logical error rate per round against measurement time.
pub fn tradeoff(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&str)) -> Result<Output, CliError> {
    if !matches!(cfg.noise, NoiseConfig::ParametricCircuit { .. }) {
        return Err(CliError::Config("tradeoff needs noise.family = \"parametric-circuit\"".into()));
    }
    let opt = cfg.flip_optimum()?;
    let recs = run_sweep(cfg, progress)?;
    let (csv, rows) = tables(&recs);
    let sums = tradeoff_summaries(&recs, opt.map(|o| o.tau_m));
    let mut summary = Vec::new();
    if let Some(o) = opt {
        summary.push(format!("flip-optimal tau_m = {:.4e} s (beta = {:.4}, average flip {:.4e})", o.tau_m, o.beta, o.p_avg));
    }
    for s in &sums {
        summary.push(format!(
            "d={} T={} {}: best tau_m = {:.4e} s with p_bar {:.4e}{}{}",
            s.d,
            s.rounds,
            s.decoder.name(),
            s.tau_m_best,
            s.p_bar_best,
            s.p_bar_at_flip_opt.map(|p| format!(", p_bar at flip optimum {p:.4e}")).unwrap_or_default(),
            if s.interior_minimum { "" } else { " (minimum at the edge of the scan)" }
        ));
    }
    let json = json!({ "command": "tradeoff", "config": cfg, "rows": rows, "flip_optimum": opt, "summary": sums });
    Ok(Output { tradeoff: sums, ..Output::new(csv, json, summary, recs) })
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn violation_checks(label: &str, g: &GraphicalModel) -> Vec<Check> {
    let v = g.validate();
    let c1: Vec<_> = v.iter().filter(|x| matches!(x, Violation::Rank { .. })).collect();
    let c2: Vec<_> = v.iter().filter(|x| matches!(x, Violation::Probability { .. })).collect();
    let other: Vec<_> = v.iter().filter(|x| !matches!(x, Violation::Rank { .. } | Violation::Probability { .. })).collect();
    let show = |xs: &[&Violation]| {
        let mut s = format!("{} violation(s)", xs.len());
        for x in xs.iter().take(5) {
            s.push_str(&format!("; {x:?}"));
        }
        s
    };
    vec![
        Check::new(format!("{label} C1 (rank two edges)"), c1.is_empty(), show(&c1)),
        Check::new(format!("{label} C2 (probabilities below 1/2)"), c2.is_empty(), show(&c2)),
        Check::new(format!("{label} structure"), other.is_empty(), show(&other)),
    ]
}

/// Checks of exported model files: (C1), (C2) and array shapes.
pub fn validate_model_file(value: &Value) -> Result<Vec<Check>, CliError> {
    let graphs = import_model_file(value).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(graphs.iter().flat_map(|g| violation_checks(&format!("{:?}-error graph", g.error_basis), g)).collect())
}

fn readout_checks(name: &str, m: &SoftModel, samples: usize, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for ideal in [0u8, 1] {
        let z = m.normalization(ideal, 1e-10)?;
        out.push(Check::new(format!("{name} density {ideal} normalised"), (z - 1.0).abs() < 1e-6, format!("integral {z:.12}")));
        let closed = m.soft_flip_prob(ideal);
        let quad = m.soft_flip_prob_quadrature(ideal, 1e-13)?;
        out.push(Check::new(
            format!("{name} flip probability {ideal}"),
            (closed - quad).abs() < 1e-8,
            format!("closed form {closed:.10e}, quadrature {quad:.10e}"),
        ));
    }
    if let SoftFamily::AmplitudeDamping { tau_m, tau_a, tau_f } = m.family() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ideal in [0u8, 1] {
            let mut xs: Vec<f64> = (0..samples).map(|_| simulate_readout(ideal, tau_m, tau_a, tau_f, 64, &mut rng)).collect();
            let ks = ks_distance(m, ideal, &mut xs)?;
            out.push(Check::new(
                format!("{name} density {ideal} against simulated readout"),
                ks < 0.01,
                format!("KS distance {ks:.2e} over {samples} records"),
            ));
        }
    }
    Ok(out)
}

/// Model checks for a configuration at its smallest distance and first
/// scanned value: (C1)/(C2), the syndrome/boundary and posterior/weight
/// identities on `samples` shots, and the readout densities (amplitude
/// damping against `ks_samples` simulated records).
pub fn validate(cfg: &ExperimentConfig, samples: usize, ks_samples: usize) -> Result<Output, CliError> {
    let plan = cfg.plan()?;
    let d = *cfg.distances.iter().min().expect("validated");
    let spec = plan.points.iter().find(|p| p.d == d).expect("validated");
    let model = spec.noise.build(spec.d, spec.rounds)?;
    let mut checks = Vec::new();
    for g in &model.graphs {
        checks.extend(violation_checks(&format!("{:?}-error graph", g.error_basis), g));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = check_syndrome_boundary(&model, samples, &mut rng);
    checks.push(Check::new("syndrome equals boundary of extended fault set", s.passed(), format!("{} of {} shots differ", s.failures, s.samples)));
    let s = check_posterior_weights(&model, samples, 1e-9, &mut rng);
    checks.push(Check::new(
        "log posterior difference equals weight difference",
        s.passed(),
        format!("{} of {} shots off, max relative error {:.2e}", s.failures, s.samples, s.max_error),
    ));
    let readouts: Vec<(String, SoftModel)> = match &cfg.noise {
        NoiseConfig::Pheno { .. } | NoiseConfig::Circuit { .. } => vec![("readout".into(), model.graphs[0].vertex_models[0].clone())],
        NoiseConfig::ParametricCircuit { tau_a, tau_f, .. } => cfg
            .scan()?
            .into_iter()
            .map(|t| Ok((format!("readout tau_m={t:e}"), SoftModel::amplitude_damping(t, *tau_a, *tau_f)?)))
            .collect::<Result<_, softqec::Error>>()?,
    };
    for (name, m) in readouts {
        checks.extend(readout_checks(&name, &m, ks_samples, cfg.seed)?);
    }
    let failed = checks.iter().any(|c| !c.passed);
    let summary = checks.iter().map(Check::line).collect();
    let json = json!({ "command": "validate", "config": cfg, "d": spec.d, "rounds": spec.rounds, "param": spec.param, "checks": checks });
    Ok(Output { failed, ..Output::new(String::new(), json, summary, Vec::new()) })
}

/// Fault graphs of one point, or its decoding graph for the first decoder.
pub fn export_graph(cfg: &ExperimentConfig, d: Option<usize>, rounds: Option<usize>, param: Option<f64>, decoding: bool) -> Result<Value, CliError> {
    let d = d.unwrap_or(cfg.distances[0]);
    let rounds = match rounds {
        Some(t) => t,
        None => cfg.rounds.resolve(d)?[0],
    };
    let x = param.unwrap_or(cfg.scan()?[0]);
    let mut c = cfg.clone();
    c.distances = vec![d];
    c.rounds = Rounds::Fixed(rounds);
    c.validate()?;
    let spec = c
        .plan()?
        .points
        .into_iter()
        .find(|p| p.param == x)
        .ok_or_else(|| CliError::Config(format!("{} = {x} is not in the scan", cfg.param_name())))?;
    let model = spec.noise.build(d, rounds)?;
    if !decoding {
        return Ok(model.export());
    }
    let opts = GraphOptions { readout: cfg.decoders[0].readout(), precision: cfg.precision, ..GraphOptions::default() };
    Ok(json!({
        "distance": d,
        "rounds": rounds,
        "x_error_graph": DecodingGraph::build(&model.graphs[0], opts).export(None),
        "z_error_graph": DecodingGraph::build(&model.graphs[1], opts).export(None),
    }))
}
