//! Posterior samples, Bayes factors and summaries.
//!
//! Interval estimates use the inclusive order-statistic rule (the default
//! of most statistics packages): for a sorted sample `v_0 ≤ … ≤ v_{n-1}`
//! the `q`-quantile is `v_⌊h⌋ + (h - ⌊h⌋)(v_⌊h⌋+1 - v_⌊h⌋)` with
//! `h = (n - 1) q`. Means are taken over the sorted values so that every
//! summary is independent of sample order.

use std::io::{Read, Write};

use serde::{Serialize, Serializer};

use crate::data::AllowedSet;
use crate::error::{Error, Result};
use crate::likelihood::cumulative_hazard_with;
use crate::mcmc::ModelState;
use crate::priors::{prior_marginals, Hyperparameters};

/// One recorded draw of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub iteration: u64,
    pub k: usize,
    /// `γ_t` for `t = 1..=t_max` (index `t - 1`).
    pub gamma: Vec<bool>,
    /// `z_rt`, `m × t_max`.
    pub z: Vec<Vec<bool>>,
    /// `α_rt`, `m × t_max`.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub inclusion: Vec<Vec<bool>>,
    pub pi_beta: f64,
}

impl PosteriorSample {
    pub fn from_state(iteration: u64, state: &ModelState) -> Self {
        let t_max = state.cp.t_max();
        let m = state.bh.alpha_star.len();
        Self {
            iteration,
            k: state.cp.k(),
            gamma: (1..=t_max).map(|t| state.cp.gamma(t)).collect(),
            z: (0..m).map(|r| (1..=t_max).map(|t| state.cp.z(r, t)).collect()).collect(),
            alpha: state.alpha(),
            beta: state.reg.beta.clone(),
            inclusion: state.reg.inclusion.clone(),
            pi_beta: state.reg.pi_beta,
        }
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn t_max(&self) -> usize {
        self.gamma.len()
    }

    pub fn p(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, len: usize, row: usize, column: &str) -> Result<Vec<bool>> {
    if s.len() != len {
        return Err(Error::SampleFormat(format!(
            "row {row}: column {column} has {} flags, expected {len}",
            s.len()
        )));
    }
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::SampleFormat(format!("row {row}: bad flag '{c}' in {column}"))),
        })
        .collect()
}

fn header(m: usize, p: usize, t_max: usize) -> Vec<String> {
    let mut cols = vec!["iteration".to_string(), "K".into(), "gamma".into(), "z".into()];
    for r in 1..=m {
        for t in 1..=t_max {
            cols.push(format!("alpha_{r}_{t}"));
        }
    }
    for r in 1..=m {
        for j in 1..=p {
            cols.push(format!("beta_{r}_{j}"));
        }
    }
    cols.push("inclusion".into());
    cols.push("pi_beta".into());
    cols
}

/// Streaming CSV writer for posterior samples (one row per draw).
///
/// `gamma` is a string of `t_max` flags; `z` and `inclusion` hold one flag
/// string per risk separated by `|`; `alpha_r_t` and `beta_r_j` are 1-based.
pub struct SampleWriter<W: Write> {
    inner: csv::Writer<W>,
    shape: (usize, usize, usize),
}

impl<W: Write> SampleWriter<W> {
    pub fn new(out: W, m: usize, p: usize, t_max: usize) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(header(m, p, t_max))?;
        Ok(Self {
            inner,
            shape: (m, p, t_max),
        })
    }

    pub fn write(&mut self, s: &PosteriorSample) -> Result<()> {
        if (s.m(), s.p(), s.t_max()) != self.shape {
            return Err(Error::Dimension("sample shape differs from the header".into()));
        }
        let mut row = vec![s.iteration.to_string(), s.k.to_string(), bits(&s.gamma)];
        row.push(s.z.iter().map(|z| bits(z)).collect::<Vec<_>>().join("|"));
        row.extend(s.alpha.iter().flatten().map(|a| format!("{a}")));
        row.extend(s.beta.iter().flatten().map(|b| format!("{b}")));
        row.push(s.inclusion.iter().map(|b| bits(b)).collect::<Vec<_>>().join("|"));
        row.push(format!("{}", s.pi_beta));
        self.inner.write_record(&row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io("<samples>", e))
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::io("<samples>", e.into_error()))
    }
}

/// Samples read back from CSV together with their shape.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub m: usize,
    pub p: usize,
    pub t_max: usize,
    pub samples: Vec<PosteriorSample>,
}

fn infer_shape(cols: &csv::StringRecord) -> Result<(usize, usize, usize)> {
    let fixed = ["iteration", "K", "gamma", "z"];
    if cols.len() < 6 || fixed.iter().zip(cols.iter()).any(|(a, b)| *a != b) {
        return Err(Error::SampleFormat("not a sample file: unexpected header".into()));
    }
    let alpha: Vec<&str> = cols.iter().filter(|c| c.starts_with("alpha_")).collect();
    let beta = cols.iter().filter(|c| c.starts_with("beta_")).count();
    let m = alpha
        .iter()
        .filter_map(|c| c.split('_').nth(1)?.parse::<usize>().ok())
        .max()
        .unwrap_or(0);
    if m == 0 || alpha.len() % m != 0 || beta % m != 0 {
        return Err(Error::SampleFormat("cannot infer (m, p, t_max) from header".into()));
    }
    let (p, t_max) = (beta / m, alpha.len() / m);
    let expected = header(m, p, t_max);
    if cols.len() != expected.len() || expected.iter().zip(cols.iter()).any(|(a, b)| a != b) {
        return Err(Error::SampleFormat("sample header is not in canonical order".into()));
    }
    Ok((m, p, t_max))
}

pub fn read_samples<R: Read>(source: R) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let head = reader.headers()?.clone();
    if head.is_empty() || (head.len() == 1 && head[0].is_empty()) {
        return Err(Error::EmptySamples);
    }
    let (m, p, t_max) = infer_shape(&head)?;
    let mut samples = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::SampleFormat(format!("row {row}: {e}")))?;
        if rec.len() != head.len() {
            return Err(Error::SampleFormat(format!(
                "row {row}: {} fields, expected {}",
                rec.len(),
                head.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| Error::SampleFormat(format!("row {row}: bad number '{}' in {}", &rec[k], &head[k])))
        };
        let int = |k: usize| -> Result<u64> {
            rec[k]
                .parse::<u64>()
                .map_err(|_| Error::SampleFormat(format!("row {row}: bad integer '{}' in {}", &rec[k], &head[k])))
        };
        let gamma = parse_bits(&rec[2], t_max, row, "gamma")?;
        let z_parts: Vec<&str> = rec[3].split('|').collect();
        if z_parts.len() != m {
            return Err(Error::SampleFormat(format!("row {row}: z has {} risks", z_parts.len())));
        }
        let z = z_parts
            .iter()
            .map(|s| parse_bits(s, t_max, row, "z"))
            .collect::<Result<Vec<_>>>()?;
        let mut k = 4;
        let mut alpha = vec![vec![0.0; t_max]; m];
        for a in alpha.iter_mut().flatten() {
            *a = num(k)?;
            k += 1;
        }
        let mut beta = vec![vec![0.0; p]; m];
        for b in beta.iter_mut().flatten() {
            *b = num(k)?;
            k += 1;
        }
        let inc_parts: Vec<&str> = rec[k].split('|').collect();
        if inc_parts.len() != m {
            return Err(Error::SampleFormat(format!("row {row}: inclusion has {} risks", inc_parts.len())));
        }
        let inclusion = inc_parts
            .iter()
            .map(|s| parse_bits(s, p, row, "inclusion"))
            .collect::<Result<Vec<_>>>()?;
        let sample = PosteriorSample {
            iteration: int(0)?,
            k: int(1)? as usize,
            gamma,
            z,
            alpha,
            beta,
            inclusion,
            pi_beta: num(k + 1)?,
        };
        if sample.k != sample.gamma.iter().filter(|&&g| g).count() {
            return Err(Error::SampleFormat(format!("row {row}: K disagrees with gamma")));
        }
        samples.push(sample);
    }
    Ok(SampleSet { m, p, t_max, samples })
}

/// Inclusive order-statistic quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Monte Carlo standard error of the mean by non-overlapping batch means
/// with batch size `⌊√n⌋`.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let size = (n as f64).sqrt().floor() as usize;
    let batches = n / size;
    if batches < 2 {
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        return (var / n as f64).sqrt();
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = size as f64 * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / (batches * size) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Mean and equal-tailed 95% interval.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            lower: quantile_sorted(&values, 0.025),
            upper: quantile_sorted(&values, 0.975),
        }
    }
}

/// Bayes factor value; infinite entries serialise as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesFactor(pub f64);

impl BayesFactor {
    pub fn display(&self) -> String {
        if self.0.is_infinite() {
            "inf".into()
        } else {
            format!("{}", self.0)
        }
    }
}

impl Serialize for BayesFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.display())
        }
    }
}

/// Posterior odds over prior odds; `0` and `inf` at the boundary counts.
pub fn odds_ratio(count: usize, n: usize, prior: f64) -> BayesFactor {
    if count == 0 {
        return BayesFactor(0.0);
    }
    if count == n {
        return BayesFactor(f64::INFINITY);
    }
    let f = count as f64 / n as f64;
    BayesFactor((f / (1.0 - f)) / (prior / (1.0 - prior)))
}

#[derive(Debug, Clone, Serialize)]
pub struct SavageDickey {
    pub bayes_factor: f64,
    pub posterior_k0: f64,
    pub prior_k0: f64,
    pub count_k0: usize,
    pub n_samples: usize,
    pub mc_standard_error: f64,
}

pub fn savage_dickey_k0(
    samples: &[PosteriorSample],
    hyper: &Hyperparameters,
    allowed: &AllowedSet,
) -> Result<SavageDickey> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let prior = prior_marginals(hyper, allowed);
    let indicator: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.k == 0))).collect();
    let count = samples.iter().filter(|s| s.k == 0).count();
    let freq = count as f64 / samples.len() as f64;
    Ok(SavageDickey {
        bayes_factor: freq / prior.p_k0,
        posterior_k0: freq,
        prior_k0: prior.p_k0,
        count_k0: count,
        n_samples: samples.len(),
        mc_standard_error: batch_means_se(&indicator) / prior.p_k0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BayesFactorEntry {
    /// 1-based risk for `z` entries, absent for `γ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk: Option<usize>,
    pub t: usize,
    pub count: usize,
    pub n_samples: usize,
    pub posterior: f64,
    pub prior: f64,
    pub bayes_factor: BayesFactor,
}

#[derive(Debug, Clone, Serialize)]
pub struct BayesFactorReport {
    pub savage_dickey: SavageDickey,
    pub gamma: Vec<BayesFactorEntry>,
    pub z: Vec<BayesFactorEntry>,
}

impl BayesFactorReport {
    pub fn gamma_at(&self, t: usize) -> Option<&BayesFactorEntry> {
        self.gamma.iter().find(|e| e.t == t)
    }

    /// `risk` is 1-based.
    pub fn z_at(&self, risk: usize, t: usize) -> Option<&BayesFactorEntry> {
        self.z.iter().find(|e| e.t == t && e.risk == Some(risk))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["kind", "risk", "t", "count", "n_samples", "posterior", "prior", "bayes_factor"])?;
        for (kind, entries) in [("gamma", &self.gamma), ("z", &self.z)] {
            for e in entries {
                w.write_record([
                    kind.to_string(),
                    e.risk.map(|r| r.to_string()).unwrap_or_default(),
                    e.t.to_string(),
                    e.count.to_string(),
                    e.n_samples.to_string(),
                    format!("{}", e.posterior),
                    format!("{}", e.prior),
                    e.bayes_factor.display(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<bayes factors>", e))
    }
}

pub fn per_time_bayes_factors(
    samples: &[PosteriorSample],
    hyper: &Hyperparameters,
    allowed: &AllowedSet,
) -> Result<BayesFactorReport> {
    let savage_dickey = savage_dickey_k0(samples, hyper, allowed)?;
    let prior = prior_marginals(hyper, allowed);
    let n = samples.len();
    let entry = |risk: Option<usize>, t: usize, count: usize, prior: f64| BayesFactorEntry {
        risk,
        t,
        count,
        n_samples: n,
        posterior: count as f64 / n as f64,
        prior,
        bayes_factor: odds_ratio(count, n, prior),
    };
    let mut gamma = Vec::new();
    let mut z = Vec::new();
    for &t in allowed.times() {
        let count = samples.iter().filter(|s| s.gamma[t - 1]).count();
        gamma.push(entry(None, t, count, prior.p_gamma1));
    }
    for r in 0..hyper.m {
        for &t in allowed.times() {
            let count = samples.iter().filter(|s| s.z[r][t - 1]).count();
            z.push(entry(Some(r + 1), t, count, prior.p_z1[r]));
        }
    }
    Ok(BayesFactorReport {
        savage_dickey,
        gamma,
        z,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaSummary {
    pub risk: usize,
    pub t: usize,
    #[serde(flatten)]
    pub interval: Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaSummary {
    pub risk: usize,
    pub covariate: usize,
    pub inclusion_probability: f64,
    pub unconditional: Interval,
    /// Absent when the coefficient was never included.
    pub conditional: Option<Interval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulativeHazardSummary {
    pub risk: usize,
    pub t: usize,
    #[serde(flatten)]
    pub interval: Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub n_samples: usize,
    pub profile: Vec<f64>,
    pub alpha: Vec<AlphaSummary>,
    pub beta: Vec<BetaSummary>,
    pub cumulative_hazard: Vec<CumulativeHazardSummary>,
}

/// Posterior means and 95% intervals of `α_rt`, `β_rj` and the cumulative
/// hazard at the covariate `profile`. Risks and times are 1-based.
pub fn summarize(samples: &[PosteriorSample], profile: &[f64]) -> Result<Summary> {
    let first = samples.first().ok_or(Error::EmptySamples)?;
    let (m, p, t_max) = (first.m(), first.p(), first.t_max());
    if profile.len() != p {
        return Err(Error::Dimension(format!(
            "profile has {} covariates, samples have {p}",
            profile.len()
        )));
    }
    let mut alpha = Vec::with_capacity(m * t_max);
    for r in 0..m {
        for t in 1..=t_max {
            alpha.push(AlphaSummary {
                risk: r + 1,
                t,
                interval: Interval::from_values(samples.iter().map(|s| s.alpha[r][t - 1]).collect()),
            });
        }
    }
    let mut beta = Vec::with_capacity(m * p);
    for r in 0..m {
        for j in 0..p {
            let included: Vec<f64> = samples
                .iter()
                .filter(|s| s.inclusion[r][j])
                .map(|s| s.beta[r][j])
                .collect();
            beta.push(BetaSummary {
                risk: r + 1,
                covariate: j + 1,
                inclusion_probability: included.len() as f64 / samples.len() as f64,
                unconditional: Interval::from_values(samples.iter().map(|s| s.beta[r][j]).collect()),
                conditional: (!included.is_empty()).then(|| Interval::from_values(included)),
            });
        }
    }
    let mut paths = vec![vec![Vec::with_capacity(samples.len()); t_max]; m];
    for s in samples {
        for (r, per_risk) in paths.iter_mut().enumerate() {
            let ch = cumulative_hazard_with(&s.alpha, &s.beta, profile, r);
            for (t, v) in ch.into_iter().enumerate() {
                per_risk[t].push(v);
            }
        }
    }
    let mut cumulative_hazard = Vec::with_capacity(m * t_max);
    for (r, per_risk) in paths.into_iter().enumerate() {
        for (t, values) in per_risk.into_iter().enumerate() {
            cumulative_hazard.push(CumulativeHazardSummary {
                risk: r + 1,
                t: t + 1,
                interval: Interval::from_values(values),
            });
        }
    }
    Ok(Summary {
        n_samples: samples.len(),
        profile: profile.to_vec(),
        alpha,
        beta,
        cumulative_hazard,
    })
}

/// Per-time check of `P(γ_t = 1)` against its prior value.
#[derive(Debug, Clone, Serialize)]
pub struct GammaCheck {
    pub t: usize,
    pub frequency: f64,
    pub prior: f64,
    pub mc_standard_error: f64,
    pub pass: bool,
}

/// Per-risk check of `P(z_rt = 1 | γ_t = 1)`, pooled over admissible times.
#[derive(Debug, Clone, Serialize)]
pub struct ZCheck {
    pub risk: usize,
    pub frequency: f64,
    pub prior: f64,
    pub pass: bool,
}

/// Comparison of sampled change-point marginals with the analytic prior.
#[derive(Debug, Clone, Serialize)]
pub struct PriorCheckReport {
    pub n_samples: usize,
    pub k_empirical: Vec<f64>,
    pub k_prior: Vec<f64>,
    pub tv_k: f64,
    pub tv_tolerance: f64,
    pub k_pass: bool,
    pub gamma: Vec<GammaCheck>,
    pub z: Vec<ZCheck>,
    pub z_tolerance: f64,
    pub pass: bool,
}

/// Tolerances: total variation of `K` at most 0.05, `P(γ_t = 1)` within
/// three batch-means standard errors, pooled `z` frequencies within 0.02.
pub fn prior_check(
    samples: &[PosteriorSample],
    hyper: &Hyperparameters,
    allowed: &AllowedSet,
) -> Result<PriorCheckReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (tv_tolerance, z_tolerance) = (0.05, 0.02);
    let prior = prior_marginals(hyper, allowed);
    let n = samples.len();
    let mut k_empirical = vec![0.0; prior.k_distribution.len()];
    for s in samples {
        if s.k >= k_empirical.len() {
            return Err(Error::State(format!("sample has K = {} beyond the support", s.k)));
        }
        k_empirical[s.k] += 1.0;
    }
    k_empirical.iter_mut().for_each(|f| *f /= n as f64);
    let tv_k = 0.5
        * k_empirical
            .iter()
            .zip(&prior.k_distribution)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let k_pass = tv_k <= tv_tolerance;
    let gamma: Vec<GammaCheck> = allowed
        .times()
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = samples.iter().map(|s| f64::from(u8::from(s.gamma[t - 1]))).collect();
            let frequency = xs.iter().sum::<f64>() / n as f64;
            let mc_standard_error = batch_means_se(&xs);
            GammaCheck {
                t,
                frequency,
                prior: prior.p_gamma1,
                mc_standard_error,
                pass: (frequency - prior.p_gamma1).abs() <= 3.0 * mc_standard_error,
            }
        })
        .collect();
    let z: Vec<ZCheck> = (0..hyper.m)
        .map(|r| {
            let (mut on, mut active) = (0usize, 0usize);
            for s in samples {
                for &t in allowed.times() {
                    if s.gamma[t - 1] {
                        active += 1;
                        on += usize::from(s.z[r][t - 1]);
                    }
                }
            }
            let expected = prior.p_z_given_gamma[r];
            let frequency = if active == 0 { expected } else { on as f64 / active as f64 };
            ZCheck {
                risk: r + 1,
                frequency,
                prior: expected,
                pass: (frequency - expected).abs() <= z_tolerance,
            }
        })
        .collect();
    let pass = k_pass && gamma.iter().all(|g| g.pass) && z.iter().all(|z| z.pass);
    Ok(PriorCheckReport {
        n_samples: n,
        k_empirical,
        k_prior: prior.k_distribution,
        tv_k,
        tv_tolerance,
        k_pass,
        gamma,
        z,
        z_tolerance,
        pass,
    })
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

impl Summary {
    pub fn write_alpha_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = writer(out);
        w.write_record(["risk", "t", "mean", "lower", "upper"])?;
        for a in &self.alpha {
            let i = a.interval;
            w.write_record([a.risk.to_string(), a.t.to_string(), i.mean.to_string(), i.lower.to_string(), i.upper.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<alpha summary>", e))
    }

    pub fn write_beta_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = writer(out);
        w.write_record([
            "risk",
            "covariate",
            "inclusion_probability",
            "mean",
            "lower",
            "upper",
            "conditional_mean",
            "conditional_lower",
            "conditional_upper",
        ])?;
        for b in &self.beta {
            let u = b.unconditional;
            let cond = |f: fn(&Interval) -> f64| b.conditional.as_ref().map(|c| f(c).to_string()).unwrap_or_default();
            w.write_record([
                b.risk.to_string(),
                b.covariate.to_string(),
                b.inclusion_probability.to_string(),
                u.mean.to_string(),
                u.lower.to_string(),
                u.upper.to_string(),
                cond(|c| c.mean),
                cond(|c| c.lower),
                cond(|c| c.upper),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<beta summary>", e))
    }

    pub fn write_cumulative_hazard_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = writer(out);
        w.write_record(["risk", "t", "mean", "lower", "upper"])?;
        for c in &self.cumulative_hazard {
            let i = c.interval;
            w.write_record([c.risk.to_string(), c.t.to_string(), i.mean.to_string(), i.lower.to_string(), i.upper.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<cumulative hazard summary>", e))
    }
}
