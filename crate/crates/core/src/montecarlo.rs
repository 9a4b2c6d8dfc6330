//! Monte Carlo trials, failure statistics, logical error rate per round,
//! threshold fits and deterministic parallel sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::decoding_graph::{DecodingGraph, GraphOptions, ReadoutMode, WeightPrecision};
use crate::mwpm_decoder::MwpmDecoder;
use crate::noise_models::{build_circuit_model, build_pheno_model, parametric_spec, CircuitSpec, NoiseModel, Shot};
use crate::numerics::nelder_mead;
use crate::soft_measurement::{sigma_for_hardened, SoftFamily, SoftModel};
use crate::uf_decoder::{Growth, UfDecoder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    SoftUf,
    HardUf,
    SoftMwpm,
    HardMwpm,
    /// Soft UF with whole-edge growth.
    SoftUfWhole,
    HardUfWhole,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 6] =
        [DecoderKind::SoftUf, DecoderKind::HardUf, DecoderKind::SoftMwpm, DecoderKind::HardMwpm, DecoderKind::SoftUfWhole, DecoderKind::HardUfWhole];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::SoftUf => "soft-uf",
            DecoderKind::HardUf => "hard-uf",
            DecoderKind::SoftMwpm => "soft-mwpm",
            DecoderKind::HardMwpm => "hard-mwpm",
            DecoderKind::SoftUfWhole => "soft-uf-whole",
            DecoderKind::HardUfWhole => "hard-uf-whole",
        }
    }

    pub fn parse(s: &str) -> Option<DecoderKind> {
        DecoderKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn readout(self) -> ReadoutMode {
        match self {
            DecoderKind::SoftUf | DecoderKind::SoftMwpm | DecoderKind::SoftUfWhole => ReadoutMode::Soft,
            _ => ReadoutMode::Hard,
        }
    }
}

/// Readout model of the noisy measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ReadoutSpec {
    Gaussian { sigma: f64 },
    AmplitudeDamping { tau_m: f64, tau_a: f64, tau_f: f64 },
    /// Gaussian whose hardened flip probability is `p_hardened`.
    HardenedGaussian { p_hardened: f64 },
}

impl ReadoutSpec {
    pub fn model(&self) -> Result<SoftModel> {
        match *self {
            ReadoutSpec::Gaussian { sigma } => SoftModel::from_family(SoftFamily::Gaussian { sigma }),
            ReadoutSpec::AmplitudeDamping { tau_m, tau_a, tau_f } => SoftModel::from_family(SoftFamily::AmplitudeDamping { tau_m, tau_a, tau_f }),
            ReadoutSpec::HardenedGaussian { p_hardened } => SoftModel::gaussian(sigma_for_hardened(p_hardened)?),
        }
    }
}

/// Noise model of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Pheno { p_d: f64, p_m: f64, readout: ReadoutSpec },
    Circuit { p_ig: f64, p_im: f64, p_cnot: f64, p_m: f64, readout: ReadoutSpec },
    /// Circuit noise derived from durations with amplitude-damping readout.
    Parametric { tau_g: f64, tau_m: f64, tau_d: f64, tau_a: f64, tau_f: f64 },
}

impl NoiseSpec {
    pub fn build(&self, d: usize, rounds: usize) -> Result<NoiseModel> {
        let d = d as i64;
        match *self {
            NoiseSpec::Pheno { p_d, p_m, readout } => build_pheno_model(d, rounds, p_d, p_m, &readout.model()?),
            NoiseSpec::Circuit { p_ig, p_im, p_cnot, p_m, readout } => {
                let spec = CircuitSpec { p_ig, p_im, p_cnot, p_m, tau_g: None, tau_m: None };
                build_circuit_model(d, rounds, &spec, &readout.model()?)
            }
            NoiseSpec::Parametric { tau_g, tau_m, tau_d, tau_a, tau_f } => {
                let spec = parametric_spec(tau_g, tau_m, tau_d)?;
                build_circuit_model(d, rounds, &spec, &SoftModel::amplitude_damping(tau_m, tau_a, tau_f)?)
            }
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub x_fail: bool,
    pub z_fail: bool,
    /// Decoder wall time in seconds, when timing is enabled.
    pub seconds: f64,
}

/// A noise model with its two decoding graphs and a decoder choice.
pub struct Experiment {
    pub model: NoiseModel,
    pub graphs: [DecodingGraph; 2],
    pub decoder: DecoderKind,
}

enum Decoder {
    Uf(UfDecoder),
    Mwpm(MwpmDecoder),
}

impl Decoder {
    fn correction_parity(&mut self, g: &DecodingGraph, shot: &Shot) -> Result<bool> {
        match self {
            Decoder::Uf(d) => d.correction_parity(g, &shot.outcomes),
            Decoder::Mwpm(d) => d.correction_parity(g, &shot.outcomes),
        }
    }
}

/// Per-thread scratch: sampled shots and decoder state.
pub struct Worker {
    shots: [Shot; 2],
    decoders: [Decoder; 2],
}

impl Experiment {
    pub fn new(model: NoiseModel, decoder: DecoderKind, precision: WeightPrecision) -> Experiment {
        let options = GraphOptions { readout: decoder.readout(), precision, ..GraphOptions::default() };
        let graphs = [DecodingGraph::build(&model.graphs[0], options), DecodingGraph::build(&model.graphs[1], options)];
        Experiment { model, graphs, decoder }
    }

    pub fn worker(&self) -> Worker {
        let make = |g: &DecodingGraph| match self.decoder {
            DecoderKind::SoftUf | DecoderKind::HardUf => Decoder::Uf(UfDecoder::new(g, Growth::Split)),
            DecoderKind::SoftUfWhole | DecoderKind::HardUfWhole => Decoder::Uf(UfDecoder::new(g, Growth::Whole)),
            DecoderKind::SoftMwpm | DecoderKind::HardMwpm => Decoder::Mwpm(MwpmDecoder::new(g)),
        };
        Worker { shots: Default::default(), decoders: [make(&self.graphs[0]), make(&self.graphs[1])] }
    }
}

/// Samples one shot, decodes both graphs and reports which logicals the
/// residual flips. A graph fails when the logical parity of its faults and
/// of the correction differ; since the correction reproduces the syndrome,
/// the residual is then a logical operator.
pub fn run_trial<R: Rng + ?Sized>(exp: &Experiment, w: &mut Worker, rng: &mut R, timing: bool) -> Result<TrialResult> {
    exp.model.sample_into(rng, &mut w.shots);
    let start = timing.then(Instant::now);
    let mut fail = [false; 2];
    for i in 0..2 {
        let gm = &exp.model.graphs[i];
        let faults = w.shots[i].faults.iter().fold(false, |acc, &e| acc ^ gm.edge_logical[e as usize]);
        let corr = w.decoders[i].correction_parity(&exp.graphs[i], &w.shots[i])?;
        fail[i] = faults != corr;
    }
    let seconds = start.map_or(0.0, |s| s.elapsed().as_secs_f64());
    Ok(TrialResult { x_fail: fail[0], z_fail: fail[1], seconds })
}

/// Failure counts with the Jeffreys posterior `Beta(k + 1/2, n - k + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub n: u64,
    pub k: u64,
    /// Posterior mean `(k + 1/2) / (n + 1)`.
    pub mean: f64,
    /// Equal-tailed 68% credible interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl TrialStats {
    /// Half-width of the credible interval, used as a standard error.
    pub fn sigma(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

pub fn estimate(n: u64, k: u64) -> TrialStats {
    assert!(k <= n, "more failures than trials");
    let a = k as f64 + 0.5;
    let b = (n - k) as f64 + 0.5;
    let beta = Beta::new(a, b).expect("positive shape parameters");
    TrialStats { n, k, mean: a / (a + b), ci_lo: beta.inverse_cdf(0.16), ci_hi: beta.inverse_cdf(0.84) }
}

/// Logical error rate per round from the X-failure probability over `t`
/// rounds: `1 - (1 - 2p)^(1/t)`.
pub fn rate_per_round(p_x_fail: f64, t: usize) -> Result<f64> {
    if !(p_x_fail >= 0.0 && p_x_fail < 0.5) || t == 0 {
        return Err(Error::InvalidParameter(format!("per-round rate needs 0 <= p < 1/2 and t >= 1, got p={p_x_fail}, t={t}")));
    }
    Ok(-((-2.0 * p_x_fail).ln_1p() / t as f64).exp_m1())
}

/// Failure probability after `t` rounds at per-round rate `p_bar`.
pub fn failure_probability(p_bar: f64, t: usize) -> f64 {
    -0.5 * (t as f64 * (-p_bar).ln_1p()).exp_m1()
}

/// Failure estimates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointResult {
    pub x: TrialStats,
    pub z: TrialStats,
    /// Either logical failed.
    pub any: TrialStats,
    pub seconds_per_trial: Option<f64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream of trial `trial` at sweep point `point`. Streams depend
/// only on these indices, so results do not depend on how trials are
/// scheduled.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(point)));
    rng.set_stream(trial);
    rng
}

/// Runs `trials` trials of one point on the current rayon pool.
pub fn run_point(exp: &Experiment, trials: u64, seed: u64, point: u64, timing: bool) -> Result<PointResult> {
    let (kx, kz, ka, secs) = (0..trials)
        .into_par_iter()
        .map_init(
            || exp.worker(),
            |w, i| {
                let mut rng = trial_rng(seed, point, i);
                let r = run_trial(exp, w, &mut rng, timing)?;
                Ok((r.x_fail as u64, r.z_fail as u64, (r.x_fail || r.z_fail) as u64, r.seconds))
            },
        )
        .try_reduce(|| (0, 0, 0, 0.0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)))?;
    Ok(PointResult {
        x: estimate(trials, kx),
        z: estimate(trials, kz),
        any: estimate(trials, ka),
        seconds_per_trial: (timing && trials > 0).then(|| secs / trials as f64),
    })
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub d: usize,
    pub rounds: usize,
    pub param_name: String,
    pub param: f64,
    pub decoder: DecoderKind,
    pub noise: NoiseSpec,
    /// Extra per-point columns carried into the output.
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub points: Vec<PointSpec>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub timing: bool,
    pub precision: WeightPrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub spec: PointSpec,
    pub result: PointResult,
}

/// Runs every point of the plan in order, trials in parallel.
pub fn sweep(plan: &SweepPlan) -> Result<Vec<PointRecord>> {
    sweep_with(plan, |_, _| {})
}

/// As [`sweep`], reporting each finished point to `progress`.
pub fn sweep_with(plan: &SweepPlan, mut progress: impl FnMut(usize, &PointRecord)) -> Result<Vec<PointRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let mut out = Vec::with_capacity(plan.points.len());
    for (i, spec) in plan.points.iter().enumerate() {
        let model = spec.noise.build(spec.d, spec.rounds)?;
        let exp = Experiment::new(model, spec.decoder, plan.precision);
        let result = pool.install(|| run_point(&exp, plan.trials, plan.seed, i as u64, plan.timing))?;
        let rec = PointRecord { spec: spec.clone(), result };
        progress(i, &rec);
        out.push(rec);
    }
    Ok(out)
}

/// One output row: a point and one failure type (`X`, `Z` or `XZ` for
/// either).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub d: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub param_name: String,
    pub param: f64,
    pub decoder: String,
    pub basis: String,
    pub n: u64,
    pub k: u64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_bar: Option<f64>,
    pub seconds_per_trial: Option<f64>,
    pub extras: BTreeMap<String, f64>,
}

pub fn rows(records: &[PointRecord]) -> Vec<Row> {
    let mut out = Vec::new();
    for r in records {
        for (basis, s) in [("X", r.result.x), ("Z", r.result.z), ("XZ", r.result.any)] {
            let p_bar = if basis == "XZ" { None } else { rate_per_round(s.mean, r.spec.rounds).ok() };
            out.push(Row {
                d: r.spec.d,
                t: r.spec.rounds,
                param_name: r.spec.param_name.clone(),
                param: r.spec.param,
                decoder: r.spec.decoder.name().to_string(),
                basis: basis.to_string(),
                n: s.n,
                k: s.k,
                mean: s.mean,
                ci_lo: s.ci_lo,
                ci_hi: s.ci_hi,
                p_bar,
                seconds_per_trial: r.result.seconds_per_trial,
                extras: r.spec.extras.clone(),
            });
        }
    }
    out
}

pub const CSV_COLUMNS: [&str; 13] = ["d", "T", "param_name", "param", "decoder", "basis", "n", "k", "mean", "ci_lo", "ci_hi", "p_bar", "seconds_per_trial"];

/// CSV text of the rows: the fixed columns followed by every extra column
/// in name order. Missing values are empty.
pub fn to_csv(rows: &[Row]) -> String {
    let mut extra: Vec<&String> = rows.iter().flat_map(|r| r.extras.keys()).collect();
    extra.sort();
    extra.dedup();
    let mut s = CSV_COLUMNS.join(",");
    for e in &extra {
        s.push(',');
        s.push_str(e);
    }
    s.push('\n');
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.d,
            r.t,
            r.param_name,
            r.param,
            r.decoder,
            r.basis,
            r.n,
            r.k,
            r.mean,
            r.ci_lo,
            r.ci_hi,
            opt(r.p_bar),
            opt(r.seconds_per_trial)
        );
        for e in &extra {
            s.push(',');
            s.push_str(&opt(r.extras.get(*e).copied()));
        }
        s.push('\n');
    }
    s
}

/// A point of a failure curve for threshold fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub d: usize,
    pub p: f64,
    pub mean: f64,
    pub sigma: f64,
    /// Trials behind the estimate, used for bootstrap resampling.
    pub n: u64,
}

impl CurvePoint {
    pub fn from_stats(d: usize, p: f64, s: &TrialStats) -> CurvePoint {
        CurvePoint { d, p, mean: s.mean, sigma: s.sigma(), n: s.n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdFit {
    pub p_star: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Weighted residual sum of squares.
    pub residual: f64,
    /// Bootstrap standard deviations (zero without bootstrap).
    pub p_star_err: f64,
    pub nu_err: f64,
    pub bootstrap_samples: usize,
}

pub const NU_RANGE: (f64, f64) = (0.5, 2.5);

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = r[i];
    }
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        for i in 0..3 {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..4 {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Best quadratic for fixed `(p*, nu)`: coefficients and weighted RSS.
fn quadratic_fit(pts: &[CurvePoint], p_star: f64, nu: f64) -> ([f64; 3], f64) {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    let xs: Vec<f64> = pts.iter().map(|q| (q.p - p_star) * (q.d as f64).powf(1.0 / nu)).collect();
    for (q, &x) in pts.iter().zip(&xs) {
        let w = 1.0 / q.sigma.max(1e-12).powi(2);
        let phi = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * phi[i] * phi[j];
            }
            r[i] += w * phi[i] * q.mean;
        }
    }
    let Some(c) = solve3(m, r) else { return ([0.0; 3], f64::INFINITY) };
    let rss = pts
        .iter()
        .zip(&xs)
        .map(|(q, &x)| {
            let e = q.mean - (c[0] + c[1] * x + c[2] * x * x);
            e * e / q.sigma.max(1e-12).powi(2)
        })
        .sum();
    (c, rss)
}

/// Checks that the largest code fails less than the smallest at the lowest
/// scanned `p` and more at the highest.
fn check_crossing(pts: &[CurvePoint]) -> Result<(f64, f64)> {
    let dmin = pts.iter().map(|q| q.d).min().ok_or(Error::NoCrossing)?;
    let dmax = pts.iter().map(|q| q.d).max().ok_or(Error::NoCrossing)?;
    let at = |d: usize, lowest: bool| -> Option<(f64, f64)> {
        let it = pts.iter().filter(|q| q.d == d);
        let q = if lowest { it.min_by(|a, b| a.p.total_cmp(&b.p)) } else { it.max_by(|a, b| a.p.total_cmp(&b.p)) }?;
        Some((q.p, q.mean))
    };
    let (lo_small, lo_big, hi_small, hi_big) = match (at(dmin, true), at(dmax, true), at(dmin, false), at(dmax, false)) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(Error::NoCrossing),
    };
    if dmin == dmax || lo_big.1 >= lo_small.1 || hi_big.1 <= hi_small.1 {
        return Err(Error::NoCrossing);
    }
    Ok((lo_small.0.max(lo_big.0), hi_small.0.min(hi_big.0)))
}

fn fit_once(pts: &[CurvePoint], range: (f64, f64)) -> ThresholdFit {
    let (lo, hi) = range;
    let span = hi - lo;
    let objective = |x: &[f64]| -> f64 {
        let (ps, nu) = (x[0], x[1]);
        let mut pen = 0.0;
        let psc = ps.clamp(lo, hi);
        let nuc = nu.clamp(NU_RANGE.0, NU_RANGE.1);
        pen += ((ps - psc) / span).powi(2) + (nu - nuc).powi(2);
        let (_, rss) = quadratic_fit(pts, psc, nuc);
        rss * (1.0 + 1e3 * pen) + 1e3 * pen
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..5 {
        for &nu0 in &[1.0, 1.6] {
            let x0 = [lo + span * (i as f64 + 0.5) / 5.0, nu0];
            let r = nelder_mead(objective, &x0, &[0.1 * span, 0.2], 2000, 1e-14);
            if best.as_ref().is_none_or(|b| r.1 < b.1) {
                best = Some(r);
            }
        }
    }
    let (x, _) = best.expect("at least one start");
    let (ps, nu) = (x[0].clamp(lo, hi), x[1].clamp(NU_RANGE.0, NU_RANGE.1));
    let (c, rss) = quadratic_fit(pts, ps, nu);
    ThresholdFit { p_star: ps, nu, a: c[0], b: c[1], c: c[2], residual: rss, p_star_err: 0.0, nu_err: 0.0, bootstrap_samples: 0 }
}

/// Fits `mean ~ A + B x + C x^2` with `x = (p - p*) d^(1/nu)`, then
/// estimates the spread of `(p*, nu)` by refitting `bootstrap` parametric
/// resamples (binomial counts at each point's fitted mean).
pub fn fit_threshold(pts: &[CurvePoint], bootstrap: usize, seed: u64) -> Result<ThresholdFit> {
    let ds: std::collections::BTreeSet<usize> = pts.iter().map(|q| q.d).collect();
    if ds.len() < 2 || pts.len() < 5 {
        return Err(Error::Fit(format!("need at least two distances and five points, got {} and {}", ds.len(), pts.len())));
    }
    let range = check_crossing(pts)?;
    let mut fit = fit_once(pts, (range.0.min(range.1), range.0.max(range.1)));
    if bootstrap > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = Vec::with_capacity(bootstrap);
        let mut nus = Vec::with_capacity(bootstrap);
        for _ in 0..bootstrap {
            let resampled: Vec<CurvePoint> = pts
                .iter()
                .map(|q| {
                    let n = q.n.max(1);
                    let k = Binomial::new(n, q.mean.clamp(0.0, 1.0)).map(|b| b.sample(&mut rng)).unwrap_or(0);
                    CurvePoint::from_stats(q.d, q.p, &estimate(n, k))
                })
                .collect();
            let Ok(r) = check_crossing(&resampled) else { continue };
            let f = fit_once(&resampled, (r.0.min(r.1), r.0.max(r.1)));
            ps.push(f.p_star);
            nus.push(f.nu);
        }
        let sd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len().max(2) - 1) as f64).sqrt()
        };
        if ps.len() >= 2 {
            fit.p_star_err = sd(&ps);
            fit.nu_err = sd(&nus);
        }
        fit.bootstrap_samples = ps.len();
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jeffreys_examples() {
        assert_eq!(estimate(0, 0).mean, 0.5);
        assert!((estimate(100, 10).mean - 10.5 / 101.0).abs() < 1e-15);
        let s = estimate(50, 50);
        assert!(s.mean < 1.0 && (s.mean - 50.5 / 51.0).abs() < 1e-15);
        let s = estimate(1000, 37);
        assert!(s.ci_lo < s.mean && s.mean < s.ci_hi && s.ci_lo > 0.0 && s.ci_hi < 1.0);
        // normal approximation for large n
        let s = estimate(1_000_000, 100_000);
        let se = (0.1f64 * 0.9 / 1e6).sqrt();
        assert!((s.sigma() - se).abs() / se < 1e-2);
    }

    #[test]
    fn per_round_rate() {
        assert!((rate_per_round(0.01, 1).unwrap() - 0.02).abs() < 1e-15);
        for &(pb, t) in &[(1e-4, 10usize), (0.003, 100), (0.05, 7)] {
            let back = rate_per_round(failure_probability(pb, t), t).unwrap();
            assert!((back - pb).abs() < 1e-12);
        }
        assert!(rate_per_round(0.5 - 1e-12, 3).unwrap() > 0.999);
        assert!(rate_per_round(0.5, 3).is_err());
    }

    fn synthetic(p_star: f64, nu: f64) -> Vec<CurvePoint> {
        let mut pts = Vec::new();
        for &d in &[7usize, 9, 11, 13] {
            for i in 0..7 {
                let p = 0.026 + 0.008 * i as f64 / 6.0;
                let x = (p - p_star) * (d as f64).powf(1.0 / nu);
                pts.push(CurvePoint { d, p, mean: 0.2 + 8.0 * x + 30.0 * x * x, sigma: 1e-3, n: 1_000_000 });
            }
        }
        pts
    }

    #[test]
    fn fit_recovers_synthetic_threshold() {
        let fit = fit_threshold(&synthetic(0.03, 1.4), 0, 0).unwrap();
        assert!((fit.p_star - 0.03).abs() < 1e-4, "{fit:?}");
        assert!((fit.nu - 1.4).abs() < 1e-2, "{fit:?}");
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn bootstrap_spread_is_small_for_precise_data() {
        let fit = fit_threshold(&synthetic(0.03, 1.4), 20, 5).unwrap();
        assert!(fit.bootstrap_samples >= 18);
        assert!(fit.p_star_err > 0.0 && fit.p_star_err < 5e-4, "{fit:?}");
    }

    #[test]
    fn no_crossing_is_an_error() {
        let mut pts = synthetic(0.03, 1.4);
        for q in &mut pts {
            q.mean = 0.1 * q.p / q.d as f64;
        }
        assert!(matches!(fit_threshold(&pts, 0, 0), Err(Error::NoCrossing)));
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: u64 = trial_rng(1, 2, 3).random();
        let b: u64 = trial_rng(1, 2, 3).random();
        let c: u64 = trial_rng(1, 2, 4).random();
        let e: u64 = trial_rng(1, 3, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, e);
    }

    fn pheno(d: usize, p: f64) -> Experiment {
        let noise = NoiseSpec::Pheno { p_d: p, p_m: 0.0, readout: ReadoutSpec::HardenedGaussian { p_hardened: p } };
        Experiment::new(noise.build(d, d).unwrap(), DecoderKind::SoftUf, WeightPrecision::F32)
    }

    #[test]
    fn zero_noise_never_fails() {
        let noise = NoiseSpec::Pheno { p_d: 0.0, p_m: 0.0, readout: ReadoutSpec::Gaussian { sigma: 0.05 } };
        let exp = Experiment::new(noise.build(3, 3).unwrap(), DecoderKind::SoftUf, WeightPrecision::F32);
        let r = run_point(&exp, 500, 1, 0, false).unwrap();
        assert_eq!((r.x.k, r.z.k), (0, 0));
    }

    #[test]
    fn far_above_threshold_mixes() {
        let noise = NoiseSpec::Pheno { p_d: 0.3, p_m: 0.0, readout: ReadoutSpec::HardenedGaussian { p_hardened: 0.3 } };
        let exp = Experiment::new(noise.build(3, 12).unwrap(), DecoderKind::SoftUf, WeightPrecision::F32);
        let r = run_point(&exp, 4000, 2, 0, false).unwrap();
        assert!((r.x.mean - 0.5).abs() < 0.04, "{:?}", r.x);
    }

    #[test]
    fn point_results_independent_of_workers() {
        let exp = pheno(5, 0.03);
        let run = |w: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().unwrap();
            pool.install(|| run_point(&exp, 600, 9, 4, false).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn csv_layout() {
        let spec = PointSpec {
            d: 3,
            rounds: 3,
            param_name: "p".into(),
            param: 0.01,
            decoder: DecoderKind::SoftUf,
            noise: NoiseSpec::Pheno { p_d: 0.01, p_m: 0.0, readout: ReadoutSpec::Gaussian { sigma: 0.5 } },
            extras: [("avg_soft_flip".to_string(), 0.25)].into_iter().collect(),
        };
        let plan = SweepPlan { points: vec![spec], trials: 50, seed: 3, workers: 1, timing: false, precision: WeightPrecision::F32 };
        let recs = sweep(&plan).unwrap();
        let csv = to_csv(&rows(&recs));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], format!("{},avg_soft_flip", CSV_COLUMNS.join(",")));
        assert!(lines[1].starts_with("3,3,p,0.01,soft-uf,X,50,"));
        assert!(lines[3].contains(",XZ,") && lines[3].ends_with(",,,0.25"));
        assert_eq!(csv, to_csv(&rows(&sweep(&plan).unwrap())));
    }
}
