//! Gaussian fitting, histogram discretization, divergence and transport
//! distances, correlation, Box-Cox and the one-sample KS normality test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default number of bins for distribution comparisons.
pub const DEFAULT_BINS: usize = 64;
/// Width of the Gaussian part of the default grid, in standard deviations.
pub const GRID_SIGMAS: f64 = 4.0;

/// Mean and population variance of a handful of accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEstimate {
    pub mean: f64,
    pub variance: f64,
    pub sample_count: usize,
}

impl GaussianEstimate {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.variance <= 0.0 {
            return if x < self.mean { 0.0 } else { 1.0 };
        }
        normal(self.mean, self.std_dev()).cdf(x)
    }
}

fn normal(mean: f64, sd: f64) -> Normal {
    Normal::new(mean, sd).expect("finite mean and positive deviation")
}

/// Arithmetic mean and population variance (divisor = sample count).
pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianEstimate> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot fit a Gaussian to no samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(GaussianEstimate {
        mean,
        variance,
        sample_count: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    masses: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        check_edges(&edges)?;
        if masses.len() + 1 != edges.len() {
            return Err(Error::invalid("histogram needs one mass per bin"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("histogram masses must be nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("histogram masses sum to {total}")));
        }
        Ok(Self { edges, masses })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::invalid("a grid needs at least one bin"));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("bin edges must be finite and strictly increasing"));
    }
    Ok(())
}

/// `bins + 1` evenly spaced edges from `lo` to `hi`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(lo < hi) {
        return Err(Error::invalid(format!("cannot grid [{lo}, {hi}] into {bins} bins")));
    }
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..bins).map(|i| lo + w * i as f64).collect();
    e.push(hi);
    Ok(e)
}

/// Bin masses of a Gaussian from CDF differences. Mass beyond the grid is
/// folded into the end bins; a zero-variance Gaussian puts everything in the
/// bin holding its mean.
pub fn discretize_gaussian(g: &GaussianEstimate, edges: &[f64]) -> Result<Histogram> {
    check_edges(edges)?;
    let bins = edges.len() - 1;
    let mut masses = vec![0.0; bins];
    if g.variance <= 0.0 {
        masses[bin_index(edges, g.mean)] = 1.0;
    } else {
        let d = normal(g.mean, g.std_dev());
        let inner = &edges[1..bins];
        let mut prev = 0.0;
        for (i, &e) in inner.iter().enumerate() {
            let c = d.cdf(e);
            masses[i] = c - prev;
            prev = c;
        }
        masses[bins - 1] = if bins == 1 { 1.0 } else { d.sf(edges[bins - 1]) };
        let total: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= total);
    }
    Histogram::new(edges.to_vec(), masses)
}

/// Index of the bin holding `x`, clamped to the end bins. The upper edge
/// belongs to the last bin.
fn bin_index(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    edges[1..].partition_point(|&e| e <= x).min(bins - 1)
}

/// Normalized sample counts per bin.
pub fn discretize_samples(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    check_edges(edges)?;
    if samples.is_empty() {
        return Err(Error::invalid("cannot discretize an empty sample"));
    }
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let mut masses = vec![0.0; edges.len() - 1];
    for &x in samples {
        if !(lo..=hi).contains(&x) {
            return Err(Error::invalid(format!("sample {x} lies outside [{lo}, {hi}]")));
        }
        masses[bin_index(edges, x)] += 1.0;
    }
    let n = samples.len() as f64;
    masses.iter_mut().for_each(|m| *m /= n);
    Histogram::new(edges.to_vec(), masses)
}

fn same_grid(p: &Histogram, q: &Histogram) -> Result<()> {
    if p.edges != q.edges {
        return Err(Error::invalid("histograms are on different grids"));
    }
    Ok(())
}

/// Jensen-Shannon divergence in nats; lies in `[0, ln 2]`.
pub fn jsd(p: &Histogram, q: &Histogram) -> Result<f64> {
    same_grid(p, q)?;
    let mut acc = 0.0;
    for (&a, &b) in p.masses.iter().zip(&q.masses) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += a * (a / m).ln();
        }
        if b > 0.0 {
            acc += b * (b / m).ln();
        }
    }
    Ok((0.5 * acc).clamp(0.0, std::f64::consts::LN_2))
}

/// First Wasserstein distance between two histograms on the same grid, with
/// each bin's mass spread uniformly across the bin.
pub fn wasserstein1(p: &Histogram, q: &Histogram) -> Result<f64> {
    same_grid(p, q)?;
    let mut total = 0.0;
    let mut d0 = 0.0;
    for i in 0..p.bins() {
        let w = p.edges[i + 1] - p.edges[i];
        let d1 = d0 + (p.masses[i] - q.masses[i]);
        total += if d0 * d1 >= 0.0 {
            0.5 * w * (d0.abs() + d1.abs())
        } else {
            // CDF difference crosses zero inside the bin.
            0.5 * w * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
        };
        d0 = d1;
    }
    Ok(total)
}

/// First Wasserstein distance between two empirical samples: the integral
/// of the absolute difference of their step CDFs. For equal sizes this is
/// the mean absolute difference of the sorted samples.
pub fn wasserstein1_samples(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("Wasserstein distance needs non-empty samples"));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut x = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        total += (next - x) * (i as f64 / na - j as f64 / nb).abs();
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        x = next;
    }
    Ok(total)
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("correlation needs two equal-length lists of at least two values"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("correlation of a constant list".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Distance between a distribution estimate and a reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub jsd: f64,
    pub wasserstein: f64,
}

/// Default grid: `bins` uniform bins over
/// `[min(samples, mean - 4 sd), max(samples, mean + 4 sd)]`.
pub fn comparison_grid(samples: &[f64], g: &GaussianEstimate, bins: usize) -> Result<Vec<f64>> {
    let sd = g.std_dev();
    let lo = samples.iter().copied().fold(g.mean - GRID_SIGMAS * sd, f64::min);
    let hi = samples.iter().copied().fold(g.mean + GRID_SIGMAS * sd, f64::max);
    padded_edges(lo, hi, bins)
}

fn padded_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if hi - lo < 1e-12 {
        uniform_edges(lo - 1e-6, hi + 1e-6, bins)
    } else {
        uniform_edges(lo, hi, bins)
    }
}

/// JSD and W1 between the histogram of `reference` and a Gaussian estimate,
/// on the default grid.
pub fn compare_gaussian(reference: &[f64], g: &GaussianEstimate, bins: usize) -> Result<Comparison> {
    let edges = comparison_grid(reference, g, bins)?;
    let p = discretize_samples(reference, &edges)?;
    let q = discretize_gaussian(g, &edges)?;
    Ok(Comparison {
        jsd: jsd(&p, &q)?,
        wasserstein: wasserstein1(&p, &q)?,
    })
}

/// JSD and W1 between two sample sets on a shared grid spanning both.
pub fn compare_samples(reference: &[f64], other: &[f64], bins: usize) -> Result<Comparison> {
    if reference.is_empty() || other.is_empty() {
        return Err(Error::invalid("comparison needs non-empty samples"));
    }
    let all = reference.iter().chain(other);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let edges = padded_edges(lo, hi, bins)?;
    let p = discretize_samples(reference, &edges)?;
    let q = discretize_samples(other, &edges)?;
    Ok(Comparison {
        jsd: jsd(&p, &q)?,
        wasserstein: wasserstein1(&p, &q)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCox {
    pub lambda: f64,
    pub transformed: Vec<f64>,
}

const BOX_COX_LOG_THRESHOLD: f64 = 1e-8;

/// `(x^lambda - 1) / lambda`, or `ln x` for `|lambda| < 1e-8`.
pub fn box_cox_transform(x: f64, lambda: f64) -> f64 {
    if lambda.abs() < BOX_COX_LOG_THRESHOLD {
        x.ln()
    } else {
        ((lambda * x.ln()).exp() - 1.0) / lambda
    }
}

/// Profile log-likelihood of `lambda` under normality of the transformed
/// data (up to an additive constant).
pub fn box_cox_log_likelihood(samples: &[f64], lambda: f64) -> f64 {
    let n = samples.len() as f64;
    let y: Vec<f64> = samples.iter().map(|&x| box_cox_transform(x, lambda)).collect();
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let log_sum: f64 = samples.iter().map(|x| x.ln()).sum();
    let llf = -0.5 * n * var.ln() + (lambda - 1.0) * log_sum;
    if llf.is_nan() {
        f64::NEG_INFINITY
    } else {
        llf
    }
}

/// Box-Cox transform with `lambda` chosen by maximum likelihood over
/// `[-20, 20]`.
pub fn box_cox(samples: &[f64]) -> Result<BoxCox> {
    box_cox_in(samples, -20.0, 20.0)
}

pub fn box_cox_in(samples: &[f64], lo: f64, hi: f64) -> Result<BoxCox> {
    if samples.len() < 2 {
        return Err(Error::invalid("Box-Cox needs at least two samples"));
    }
    if let Some(x) = samples.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(format!("Box-Cox needs positive samples, got {x}")));
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(Error::Degenerate("Box-Cox likelihood is flat for constant samples".into()));
    }
    if !(lo < hi) {
        return Err(Error::invalid("empty lambda interval"));
    }
    // Dividing by the geometric mean shifts the likelihood by a constant and
    // keeps x^lambda in range for large |lambda|.
    let log_gm = samples.iter().map(|x| x.ln()).sum::<f64>() / samples.len() as f64;
    let scaled: Vec<f64> = samples.iter().map(|x| (x.ln() - log_gm).exp()).collect();
    let llf = |l: f64| box_cox_log_likelihood(&scaled, l);

    let steps = 400;
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, llf(lo));
    for i in 1..=steps {
        let l = lo + h * i as f64;
        let v = llf(l);
        if v > best.1 {
            best = (l, v);
        }
    }
    // Golden-section refinement inside the bracketing grid cell pair.
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (llf(c), llf(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = llf(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = llf(d);
        }
    }
    let lambda = 0.5 * (a + b);
    let lambda = if llf(lambda) >= best.1 { lambda } else { best.0 };
    Ok(BoxCox {
        lambda,
        transformed: samples.iter().map(|&x| box_cox_transform(x, lambda)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, by its alternating
/// series truncated at 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a fitted Gaussian, with the
/// asymptotic p-value.
pub fn ks_test(samples: &[f64], g: &GaussianEstimate) -> Result<KsResult> {
    if samples.len() < 5 {
        return Err(Error::invalid("KS test needs at least five samples"));
    }
    if !(g.variance > 0.0) {
        return Err(Error::Degenerate("KS test against a zero-variance Gaussian".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = normal(g.mean, g.std_dev());
    let mut stat: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = d.cdf(x);
        stat = stat.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: stat,
        p_value: kolmogorov_survival(n.sqrt() * stat),
    })
}
