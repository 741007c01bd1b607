//! Scenario generation and reduction for the six uncertain hourly series.
//!
//! Sampling uses Latin Hypercube strata per (series, slot) column, each column
//! driven by its own ChaCha8 stream (`seed`, stream = column index), mapped
//! through the standard normal inverse CDF. Reduction is greedy fast-forward
//! selection under a normalized weighted Euclidean metric.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scenario CSV: {0}")]
    Csv(String),
}

impl From<csv::Error> for ScenarioError {
    fn from(e: csv::Error) -> Self {
        ScenarioError::Csv(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidParameter(msg.into())
}

pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    PriceDa,
    PriceRt,
    Ambient,
    Irradiance,
    WindSpeed,
    NonhvacLoad,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 6] = [
        SeriesKind::PriceDa,
        SeriesKind::PriceRt,
        SeriesKind::Ambient,
        SeriesKind::Irradiance,
        SeriesKind::WindSpeed,
        SeriesKind::NonhvacLoad,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Series that cannot go negative and are clamped at 0 after sampling.
    pub fn is_nonnegative(self) -> bool {
        matches!(self, SeriesKind::Irradiance | SeriesKind::WindSpeed | SeriesKind::NonhvacLoad)
    }
}

/// Six hourly series over one horizon. Prices in $/kWh, ambient in °C,
/// irradiance in kW/m², wind speed in m/s, non-HVAC load in kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfile {
    pub price_da: Vec<f64>,
    pub price_rt: Vec<f64>,
    pub ambient: Vec<f64>,
    pub irradiance: Vec<f64>,
    pub wind_speed: Vec<f64>,
    pub nonhvac_load: Vec<f64>,
}

pub type ForecastSeries = HourlyProfile;

impl HourlyProfile {
    pub fn slots(&self) -> usize {
        self.price_da.len()
    }

    pub fn series(&self, kind: SeriesKind) -> &[f64] {
        match kind {
            SeriesKind::PriceDa => &self.price_da,
            SeriesKind::PriceRt => &self.price_rt,
            SeriesKind::Ambient => &self.ambient,
            SeriesKind::Irradiance => &self.irradiance,
            SeriesKind::WindSpeed => &self.wind_speed,
            SeriesKind::NonhvacLoad => &self.nonhvac_load,
        }
    }

    pub fn series_mut(&mut self, kind: SeriesKind) -> &mut Vec<f64> {
        match kind {
            SeriesKind::PriceDa => &mut self.price_da,
            SeriesKind::PriceRt => &mut self.price_rt,
            SeriesKind::Ambient => &mut self.ambient,
            SeriesKind::Irradiance => &mut self.irradiance,
            SeriesKind::WindSpeed => &mut self.wind_speed,
            SeriesKind::NonhvacLoad => &mut self.nonhvac_load,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let nh = self.slots();
        if nh == 0 {
            return Err(invalid("profile has no slots"));
        }
        for kind in SeriesKind::ALL {
            let s = self.series(kind);
            if s.len() != nh {
                return Err(invalid(format!("series {kind:?} has {} slots, expected {nh}", s.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("series {kind:?} has non-finite values")));
            }
            if kind.is_nonnegative() && s.iter().any(|v| *v < 0.0) {
                return Err(invalid(format!("series {kind:?} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Relative standard deviations of the forecast errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub wind_speed: f64,
    pub nonhvac_load: f64,
    pub irradiance: f64,
    pub ambient: f64,
    pub price_da: f64,
    pub price_rt: f64,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        Self { wind_speed: 0.10, nonhvac_load: 0.03, irradiance: 0.10, ambient: 0.05, price_da: 0.05, price_rt: 0.15 }
    }
}

impl UncertaintySpec {
    pub fn zero() -> Self {
        Self { wind_speed: 0.0, nonhvac_load: 0.0, irradiance: 0.0, ambient: 0.0, price_da: 0.0, price_rt: 0.0 }
    }

    pub fn rel_std(&self, kind: SeriesKind) -> f64 {
        match kind {
            SeriesKind::PriceDa => self.price_da,
            SeriesKind::PriceRt => self.price_rt,
            SeriesKind::Ambient => self.ambient,
            SeriesKind::Irradiance => self.irradiance,
            SeriesKind::WindSpeed => self.wind_speed,
            SeriesKind::NonhvacLoad => self.nonhvac_load,
        }
    }

    /// Every deviation multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            wind_speed: self.wind_speed * factor,
            nonhvac_load: self.nonhvac_load * factor,
            irradiance: self.irradiance * factor,
            ambient: self.ambient * factor,
            price_da: self.price_da * factor,
            price_rt: self.price_rt * factor,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if SeriesKind::ALL.iter().any(|k| !(self.rel_std(*k) >= 0.0)) {
            return Err(invalid("relative standard deviations must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub profile: HourlyProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
    seed: u64,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>, seed: u64) -> Result<Self, ScenarioError> {
        let first = scenarios.first().ok_or_else(|| invalid("scenario set is empty"))?;
        let nh = first.profile.slots();
        for (k, s) in scenarios.iter().enumerate() {
            if !(s.probability > 0.0 && s.probability <= 1.0) {
                return Err(invalid(format!("scenario {k} has probability {}", s.probability)));
            }
            if s.profile.slots() != nh {
                return Err(invalid(format!("scenario {k} has {} slots, expected {nh}", s.profile.slots())));
            }
            s.profile.validate()?;
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { scenarios, seed })
    }

    /// Single scenario of probability one.
    pub fn deterministic(profile: HourlyProfile) -> Result<Self, ScenarioError> {
        Self::new(vec![Scenario { probability: 1.0, profile }], 0)
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> usize {
        self.scenarios[0].profile.slots()
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    /// Probability-weighted mean of one series.
    pub fn expected(&self, kind: SeriesKind) -> Vec<f64> {
        let mut out = vec![0.0; self.slots()];
        for s in &self.scenarios {
            for (o, v) in out.iter_mut().zip(s.profile.series(kind)) {
                *o += s.probability * v;
            }
        }
        out
    }
}

/// `n` rows by `dims` columns, one sample per stratum `[k/n, (k+1)/n)` in every column.
pub fn lhs_sample(n: usize, dims: usize, seed: u64) -> Result<Vec<Vec<f64>>, ScenarioError> {
    if n == 0 || dims == 0 {
        return Err(invalid("LHS needs at least one sample and one dimension"));
    }
    let below_one = 1.0 - f64::EPSILON / 2.0;
    let columns: Vec<Vec<f64>> = (0..dims)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(d as u64);
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(&mut rng);
            strata
                .iter()
                .map(|&k| ((k as f64 + rng.random::<f64>()) / n as f64).min(below_one))
                .collect()
        })
        .collect();
    Ok((0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect())
}

pub fn standard_normal_quantile(u: f64) -> f64 {
    let u = u.clamp(1e-16, 1.0 - 1e-16);
    Normal::standard().inverse_cdf(u)
}

pub fn sample_scenarios(
    forecast: &ForecastSeries,
    spec: &UncertaintySpec,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    forecast.validate()?;
    spec.validate()?;
    let nh = forecast.slots();
    let u = lhs_sample(n, SeriesKind::ALL.len() * nh, seed)?;
    let probability = 1.0 / n as f64;
    let scenarios = u
        .par_iter()
        .map(|row| {
            let mut profile = forecast.clone();
            for kind in SeriesKind::ALL {
                let sd = spec.rel_std(kind);
                let base = kind.index() * nh;
                for (t, v) in profile.series_mut(kind).iter_mut().enumerate() {
                    if sd > 0.0 {
                        *v *= 1.0 + sd * standard_normal_quantile(row[base + t]);
                    }
                    if kind.is_nonnegative() {
                        *v = v.max(0.0);
                    }
                }
            }
            Scenario { probability, profile }
        })
        .collect();
    ScenarioSet::new(scenarios, seed)
}

/// Weighted Euclidean metric over all (series, slot) differences, each series
/// divided by the mean magnitude of its forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetric {
    pub scales: [f64; 6],
    pub weights: [f64; 6],
}

impl DistanceMetric {
    pub fn from_forecast(forecast: &ForecastSeries, weights: [f64; 6]) -> Result<Self, ScenarioError> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("distance weights must be non-negative"));
        }
        let mut scales = [1.0; 6];
        for kind in SeriesKind::ALL {
            let s = forecast.series(kind);
            let mean = s.iter().map(|v| v.abs()).sum::<f64>() / s.len().max(1) as f64;
            if mean > 1e-12 {
                scales[kind.index()] = mean;
            }
        }
        Ok(Self { scales, weights })
    }

    pub fn unit() -> Self {
        Self { scales: [1.0; 6], weights: [1.0; 6] }
    }

    pub fn distance(&self, a: &Scenario, b: &Scenario) -> Result<f64, ScenarioError> {
        if a.profile.slots() != b.profile.slots() {
            return Err(invalid(format!("slot mismatch: {} vs {}", a.profile.slots(), b.profile.slots())));
        }
        Ok(self.distance_unchecked(a, b))
    }

    fn distance_unchecked(&self, a: &Scenario, b: &Scenario) -> f64 {
        let mut sum = 0.0;
        for kind in SeriesKind::ALL {
            let k = kind.index();
            let (w, sc) = (self.weights[k], self.scales[k]);
            if w == 0.0 {
                continue;
            }
            let part: f64 = a
                .profile
                .series(kind)
                .iter()
                .zip(b.profile.series(kind))
                .map(|(x, y)| ((x - y) / sc).powi(2))
                .sum();
            sum += w * part;
        }
        sum.sqrt()
    }
}

pub fn scenario_distance(a: &Scenario, b: &Scenario, metric: &DistanceMetric) -> Result<f64, ScenarioError> {
    metric.distance(a, b)
}

fn distance_matrix(set: &ScenarioSet, metric: &DistanceMetric) -> Vec<Vec<f64>> {
    let s = set.scenarios();
    (0..s.len())
        .into_par_iter()
        .map(|i| s.iter().map(|b| metric.distance_unchecked(&s[i], b)).collect())
        .collect()
}

/// Greedy fast-forward selection; returns scenario indices in the order they were chosen.
/// Ties go to the lowest index.
pub fn fast_forward_select(set: &ScenarioSet, k: usize, metric: &DistanceMetric) -> Result<Vec<usize>, ScenarioError> {
    let n = set.len();
    if k == 0 || k > n {
        return Err(invalid(format!("cannot keep {k} of {n} scenarios")));
    }
    let d = distance_matrix(set, metric);
    let rho: Vec<f64> = set.scenarios().iter().map(|s| s.probability).collect();
    let mut nearest = vec![f64::INFINITY; n];
    let mut selected = vec![false; n];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let costs: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|u| {
                if selected[u] {
                    return f64::INFINITY;
                }
                (0..n)
                    .filter(|&j| !selected[j] && j != u)
                    .map(|j| rho[j] * nearest[j].min(d[j][u]))
                    .sum()
            })
            .collect();
        let mut best = usize::MAX;
        for u in 0..n {
            if !selected[u] && (best == usize::MAX || costs[u] < costs[best]) {
                best = u;
            }
        }
        selected[best] = true;
        order.push(best);
        for j in 0..n {
            nearest[j] = nearest[j].min(d[j][best]);
        }
    }
    Ok(order)
}

/// Keeps `k` scenarios and moves each dropped scenario's probability to its
/// nearest kept one. Kept scenarios stay in their original order.
pub fn reduce_fast_forward(set: &ScenarioSet, k: usize, metric: &DistanceMetric) -> Result<ScenarioSet, ScenarioError> {
    let order = fast_forward_select(set, k, metric)?;
    let mut kept = order.clone();
    kept.sort_unstable();
    let s = set.scenarios();
    let mut prob: Vec<f64> = kept.iter().map(|&i| s[i].probability).collect();
    for (j, sj) in s.iter().enumerate() {
        if kept.binary_search(&j).is_ok() {
            continue;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (slot, &i) in kept.iter().enumerate() {
            let dist = metric.distance_unchecked(sj, &s[i]);
            if dist < best_d {
                best_d = dist;
                best = slot;
            }
        }
        prob[best] += sj.probability;
    }
    let scenarios = kept
        .iter()
        .zip(prob)
        .map(|(&i, p)| Scenario { probability: p.min(1.0), profile: s[i].profile.clone() })
        .collect();
    ScenarioSet::new(scenarios, set.seed())
}

pub fn kantorovich_distance(full: &ScenarioSet, reduced: &ScenarioSet, metric: &DistanceMetric) -> Result<f64, ScenarioError> {
    if reduced.is_empty() {
        return Err(invalid("reduced set is empty"));
    }
    if full.slots() != reduced.slots() {
        return Err(invalid("slot mismatch between full and reduced sets"));
    }
    Ok(full
        .scenarios()
        .par_iter()
        .map(|sj| {
            let m = reduced
                .scenarios()
                .iter()
                .map(|si| metric.distance_unchecked(sj, si))
                .fold(f64::INFINITY, f64::min);
            sj.probability * m
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum())
}

const CSV_HEADER: [&str; 9] =
    ["scenario_id", "prob", "slot", "price_da", "price_rt", "ambient_c", "irradiance", "wind_mps", "load_kw"];

fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

/// One row per (scenario, slot); values carry 12 significant digits.
pub fn write_scenarios_csv<W: Write>(set: &ScenarioSet, out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (id, s) in set.scenarios().iter().enumerate() {
        let p = &s.profile;
        for t in 0..p.slots() {
            w.write_record([
                id.to_string(),
                sci(s.probability),
                t.to_string(),
                sci(p.price_da[t]),
                sci(p.price_rt[t]),
                sci(p.ambient[t]),
                sci(p.irradiance[t]),
                sci(p.wind_speed[t]),
                sci(p.nonhvac_load[t]),
            ])?;
        }
    }
    w.flush().map_err(|e| ScenarioError::Csv(e.to_string()))?;
    Ok(())
}

/// Reads a set written by [`write_scenarios_csv`]. Probabilities are
/// renormalized when their decimal rounding leaves the sum within 1e-9 of one.
pub fn read_scenarios_csv<R: Read>(input: R, seed: u64) -> Result<ScenarioSet, ScenarioError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ScenarioError::Csv(format!("unexpected header {header:?}")));
    }
    let mut scenarios: Vec<Scenario> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, ScenarioError> {
            rec[i].parse::<f64>().map_err(|e| ScenarioError::Csv(format!("row {}: column {}: {e}", line + 2, CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<usize, ScenarioError> {
            rec[i].parse::<usize>().map_err(|e| ScenarioError::Csv(format!("row {}: column {}: {e}", line + 2, CSV_HEADER[i])))
        };
        let (id, slot) = (int(0)?, int(2)?);
        if id == scenarios.len() {
            scenarios.push(Scenario {
                probability: num(1)?,
                profile: HourlyProfile {
                    price_da: Vec::new(),
                    price_rt: Vec::new(),
                    ambient: Vec::new(),
                    irradiance: Vec::new(),
                    wind_speed: Vec::new(),
                    nonhvac_load: Vec::new(),
                },
            });
        } else if id + 1 != scenarios.len() {
            return Err(ScenarioError::Csv(format!("row {}: scenario ids must be contiguous from 0", line + 2)));
        }
        let s = scenarios.last_mut().expect("pushed above");
        if slot != s.profile.slots() {
            return Err(ScenarioError::Csv(format!("row {}: slots must be contiguous from 0", line + 2)));
        }
        s.profile.price_da.push(num(3)?);
        s.profile.price_rt.push(num(4)?);
        s.profile.ambient.push(num(5)?);
        s.profile.irradiance.push(num(6)?);
        s.profile.wind_speed.push(num(7)?);
        s.profile.nonhvac_load.push(num(8)?);
    }
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ScenarioError::Csv(format!("probabilities sum to {total}")));
    }
    for s in &mut scenarios {
        s.probability /= total;
    }
    ScenarioSet::new(scenarios, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy_forecast(nh: usize) -> ForecastSeries {
        let f = |a: f64, b: f64| (0..nh).map(|t| a + b * ((t as f64) * 0.26).sin()).collect::<Vec<_>>();
        HourlyProfile {
            price_da: f(0.05, 0.02),
            price_rt: f(0.06, 0.03),
            ambient: f(28.0, 4.0),
            irradiance: f(0.4, 0.4).into_iter().map(|v| v.max(0.0)).collect(),
            wind_speed: f(8.0, 3.0),
            nonhvac_load: f(600.0, 150.0),
        }
    }

    fn point(values: &[f64], p: f64) -> Scenario {
        let one = |v: f64| vec![v];
        Scenario {
            probability: p,
            profile: HourlyProfile {
                price_da: one(values[0]),
                price_rt: one(0.0),
                ambient: one(0.0),
                irradiance: one(0.0),
                wind_speed: one(0.0),
                nonhvac_load: one(0.0),
            },
        }
    }

    #[test]
    fn lhs_stratification() {
        for n in [1usize, 4, 17] {
            let m = lhs_sample(n, 5, 3).unwrap();
            for d in 0..5 {
                let mut strata: Vec<usize> = m.iter().map(|row| (row[d] * n as f64).floor() as usize).collect();
                strata.sort_unstable();
                assert_eq!(strata, (0..n).collect::<Vec<_>>());
                assert!(m.iter().all(|row| (0.0..1.0).contains(&row[d])));
            }
        }
        assert_eq!(lhs_sample(6, 3, 11).unwrap(), lhs_sample(6, 3, 11).unwrap());
        assert_ne!(lhs_sample(6, 3, 11).unwrap(), lhs_sample(6, 3, 12).unwrap());
        assert!(lhs_sample(0, 3, 1).is_err());
    }

    #[test]
    fn normal_quantile_accuracy() {
        let n = Normal::standard();
        for x in [-6.0, -3.2, -1.0, -0.1, 0.0, 0.4, 1.7, 5.5] {
            assert!((standard_normal_quantile(n.cdf(x)) - x).abs() < 1e-9, "{x}");
        }
        assert!((standard_normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
    }

    #[test]
    fn zero_deviation_reproduces_forecast() {
        let f = toy_forecast(24);
        let set = sample_scenarios(&f, &UncertaintySpec::zero(), 7, 5).unwrap();
        assert!(set.scenarios().iter().all(|s| s.profile == f));
    }

    #[test]
    fn even_probability() {
        let set = sample_scenarios(&toy_forecast(4), &UncertaintySpec::default(), 3000, 1).unwrap();
        assert!(set.scenarios().iter().all(|s| s.probability == 1.0 / 3000.0));
        assert!((set.total_probability() - 1.0).abs() <= PROBABILITY_TOLERANCE);
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let f = toy_forecast(24);
        let spec = UncertaintySpec::default();
        let n = 2000;
        let set = sample_scenarios(&f, &spec, n, 42).unwrap();
        for kind in [SeriesKind::PriceDa, SeriesKind::PriceRt, SeriesKind::Ambient, SeriesKind::NonhvacLoad] {
            let mean = set.expected(kind);
            for (t, m) in mean.iter().enumerate() {
                let mu = f.series(kind)[t];
                let bound = 3.0 * spec.rel_std(kind) * mu.abs() / (n as f64).sqrt();
                assert!((m - mu).abs() <= bound, "{kind:?} slot {t}: {m} vs {mu}");
            }
        }
    }

    #[test]
    fn distance_examples() {
        let m = DistanceMetric::unit();
        let a = point(&[1.0], 0.5);
        let b = point(&[2.0], 0.5);
        assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
        assert_eq!(m.distance(&a, &b).unwrap(), 1.0);
        assert_eq!(m.distance(&a, &b).unwrap(), m.distance(&b, &a).unwrap());
        let long = Scenario { probability: 1.0, profile: toy_forecast(3) };
        assert!(m.distance(&a, &long).is_err());
    }

    #[test]
    fn reduce_identical_pair_merges() {
        let set = ScenarioSet::new(vec![point(&[1.0], 0.5), point(&[1.0], 0.5)], 0).unwrap();
        let r = reduce_fast_forward(&set, 1, &DistanceMetric::unit()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.scenarios()[0].probability, 1.0);
    }

    #[test]
    fn reduce_all_is_identity() {
        let set = sample_scenarios(&toy_forecast(6), &UncertaintySpec::default(), 9, 2).unwrap();
        let metric = DistanceMetric::from_forecast(&toy_forecast(6), [1.0; 6]).unwrap();
        let r = reduce_fast_forward(&set, 9, &metric).unwrap();
        assert_eq!(r, set);
        assert_eq!(kantorovich_distance(&set, &r, &metric).unwrap(), 0.0);
    }

    #[test]
    fn three_point_hand_computed() {
        // points at 0, 1, 3 on one axis: pairwise distances 1, 2, 3
        let third = 1.0 / 3.0;
        let set = ScenarioSet::new(vec![point(&[0.0], third), point(&[1.0], third), point(&[3.0], 1.0 - 2.0 * third)], 0)
            .unwrap();
        let m = DistanceMetric::unit();
        let order = fast_forward_select(&set, 2, &m).unwrap();
        // first pick: costs 0 -> 1+3, 1 -> 1+2, 3 -> 3+2; second pick among {0, 3}: 1 or 2
        assert_eq!(order, vec![1, 2]);
        let r = reduce_fast_forward(&set, 2, &m).unwrap();
        assert!((kantorovich_distance(&set, &r, &m).unwrap() - third).abs() < 1e-15);
        assert!((r.scenarios()[0].probability - 2.0 * third).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let set = sample_scenarios(&toy_forecast(5), &UncertaintySpec::default(), 15, 9).unwrap();
        let mut buf = Vec::new();
        write_scenarios_csv(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scenario_id,prob,slot,price_da,price_rt,ambient_c,irradiance,wind_mps,load_kw\n"));
        let back = read_scenarios_csv(buf.as_slice(), 9).unwrap();
        assert_eq!(back.len(), 15);
        for (a, b) in set.scenarios().iter().zip(back.scenarios()) {
            for kind in SeriesKind::ALL {
                for (x, y) in a.profile.series(kind).iter().zip(b.profile.series(kind)) {
                    assert!((x - y).abs() <= 5e-12 * x.abs().max(1e-300));
                }
            }
        }
        let mut again = Vec::new();
        write_scenarios_csv(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reduction_conserves_probability_and_improves_with_k(seed in 0u64..10_000, n in 2usize..14) {
            let f = toy_forecast(4);
            let set = sample_scenarios(&f, &UncertaintySpec::default(), n, seed).unwrap();
            let metric = DistanceMetric::from_forecast(&f, [1.0; 6]).unwrap();
            let mut last = f64::INFINITY;
            for k in 1..=n {
                let r = reduce_fast_forward(&set, k, &metric).unwrap();
                prop_assert!((r.total_probability() - 1.0).abs() <= PROBABILITY_TOLERANCE);
                let kd = kantorovich_distance(&set, &r, &metric).unwrap();
                prop_assert!(kd <= last + 1e-12);
                last = kd;
            }
        }

        #[test]
        fn sampling_is_deterministic(seed in 0u64..10_000) {
            let f = toy_forecast(3);
            let a = sample_scenarios(&f, &UncertaintySpec::default(), 5, seed).unwrap();
            let b = sample_scenarios(&f, &UncertaintySpec::default(), 5, seed).unwrap();
            for (x, y) in a.scenarios().iter().zip(b.scenarios()) {
                for kind in SeriesKind::ALL {
                    let bx: Vec<u64> = x.profile.series(kind).iter().map(|v| v.to_bits()).collect();
                    let by: Vec<u64> = y.profile.series(kind).iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(bx, by);
                }
            }
        }
    }
}
