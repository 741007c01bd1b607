//! Sensitivity sweeps: one re-solve per value, one metrics row per value.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use gridsched_core::scenario::ForecastSeries;
use gridsched_core::sched_evhvac::solve_schedule;
use gridsched_core::sched_mgbid::{solve_bidding, ProfitReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{max_comfort_deviation, plan, prepare_microgrid, read_inputs, Run, ScenarioFlags, ScenarioPlan};
use crate::entities::{Entities, HvacConfig, ProblemKind, Series};
use crate::error::CliError;
use crate::output::{to_json_bytes, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knob {
    /// Household discomfort weight.
    W,
    /// Household comfort band half-width.
    Delta,
    /// Building comfort band half-width.
    DeltaT,
    /// Building discomfort weight.
    Pi,
    /// Bid deviation penalty.
    Psi,
    /// Wind and solar curtailment cost.
    VRes,
    /// Line capacity.
    PGmax,
    /// Load scaling factor.
    Lsf,
    /// Uncertainty scaling factor.
    Usf,
}

impl Knob {
    pub const ALL: [Knob; 9] =
        [Knob::W, Knob::Delta, Knob::DeltaT, Knob::Pi, Knob::Psi, Knob::VRes, Knob::PGmax, Knob::Lsf, Knob::Usf];

    pub fn name(self) -> &'static str {
        match self {
            Knob::W => "w",
            Knob::Delta => "delta",
            Knob::DeltaT => "delta_t",
            Knob::Pi => "pi",
            Knob::Psi => "psi",
            Knob::VRes => "v_res",
            Knob::PGmax => "p_gmax",
            Knob::Lsf => "lsf",
            Knob::Usf => "usf",
        }
    }

    pub fn problem(self) -> ProblemKind {
        match self {
            Knob::W | Knob::Delta => ProblemKind::EvHvac,
            _ => ProblemKind::MgBid,
        }
    }
}

impl FromStr for Knob {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Knob::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Knob::ALL.iter().map(|k| k.name()).collect();
            CliError::Usage(format!("unknown sweep parameter `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub knob: Knob,
    pub values: Vec<f64>,
}

impl FromStr for SweepSpec {
    type Err = CliError;

    /// Parses `PARAM=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, list) =
            s.split_once('=').ok_or_else(|| CliError::Usage(format!("sweep `{s}` is not of the form PARAM=v1,v2,...")))?;
        let knob: Knob = name.trim().parse()?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| CliError::Usage(format!("sweep value `{v}` is not a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(CliError::Usage("sweep needs at least one value".into()));
        }
        Ok(SweepSpec { knob, values })
    }
}

#[derive(Debug, Serialize)]
struct ScheduleMetrics {
    j_elec: f64,
    j_discomfort: f64,
    max_dev_c: f64,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Metrics {
    Schedule(ScheduleMetrics),
    Bidding(ProfitReport),
}

#[derive(Debug, Serialize)]
struct Point {
    parameter: &'static str,
    value: f64,
    metrics: Metrics,
}

fn each_hvac<'a>(ents: &'a mut Entities, knob: Knob) -> Box<dyn Iterator<Item = &'a mut HvacConfig> + 'a> {
    match knob.problem() {
        ProblemKind::EvHvac => {
            Box::new(ents.doc.community.iter_mut().flat_map(|c| c.households.iter_mut().map(|h| &mut h.hvac)))
        }
        ProblemKind::MgBid => {
            Box::new(ents.doc.microgrid.iter_mut().flat_map(|m| m.buildings.iter_mut().map(|b| &mut b.hvac)))
        }
    }
}

/// Applies one knob value to a copy of the configuration.
fn apply(base: &Entities, base_plan: &ScenarioPlan, knob: Knob, v: f64) -> Result<(Entities, ScenarioPlan), CliError> {
    let mut ents = base.clone();
    let mut p = *base_plan;
    match knob {
        Knob::W | Knob::Pi => each_hvac(&mut ents, knob).for_each(|h| h.discomfort_weight = Series::Scalar(v)),
        Knob::Delta | Knob::DeltaT => each_hvac(&mut ents, knob).for_each(|h| h.max_deviation_c = Series::Scalar(v)),
        Knob::Psi | Knob::VRes | Knob::PGmax | Knob::Lsf => {
            let m = ents.doc.microgrid.as_mut().expect("checked by the problem kind");
            match knob {
                Knob::Psi => m.market.bid_deviation_penalty = Series::Scalar(v),
                Knob::VRes => {
                    m.market.wind_curtail_cost = Series::Scalar(v);
                    m.market.solar_curtail_cost = Series::Scalar(v);
                }
                Knob::PGmax => m.market.line_capacity_kw = Some(Series::Scalar(v)),
                _ => m.load_scaling = Some(v),
            }
        }
        Knob::Usf => {
            if !(v >= 0.0) {
                return Err(CliError::Usage(format!("uncertainty scaling must be non-negative, got {v}")));
            }
            p.uncertainty_scaling = v;
        }
    }
    Ok((ents, p))
}

fn solve_point(ents: &Entities, forecast: &ForecastSeries, p: &ScenarioPlan, knob: Knob) -> Result<Metrics, CliError> {
    match knob.problem() {
        ProblemKind::EvHvac => {
            let problem = ents.community(forecast)?;
            let s = solve_schedule(&problem)?;
            Ok(Metrics::Schedule(ScheduleMetrics {
                j_elec: s.electricity_cost,
                j_discomfort: s.discomfort_cost,
                max_dev_c: max_comfort_deviation(&problem, &s),
            }))
        }
        ProblemKind::MgBid => {
            let (mg, sc) = prepare_microgrid(ents, forecast, p)?;
            Ok(Metrics::Bidding(solve_bidding(&mg, &sc, &ents.solver())?.profit))
        }
    }
}

pub fn sweep(config: &Path, forecasts: &Path, out: &Path, flags: ScenarioFlags, spec: &SweepSpec) -> Result<PathBuf, CliError> {
    let mut run = Run::new("sweep", out)?;
    let inp = read_inputs(&mut run, config, forecasts)?;
    let knob = spec.knob;
    if inp.entities.kind() != knob.problem() {
        return Err(CliError::Usage(format!("sweep parameter `{}` does not apply to this problem kind", knob.name())));
    }
    let base_plan = plan(Some(&inp.entities), flags)?;
    if knob.problem() == ProblemKind::MgBid {
        run.set_plan(base_plan);
    }

    let names: Vec<String> = (0..spec.values.len()).map(|i| format!("points/{}_{i}.json", knob.name())).collect();
    let points = spec
        .values
        .par_iter()
        .zip(&names)
        .map(|(&v, name)| {
            let (ents, p) = apply(&inp.entities, &base_plan, knob, v)?;
            let metrics = solve_point(&ents, &inp.forecast, &p, knob)?;
            let point = Point { parameter: knob.name(), value: v, metrics };
            run.out.write(name, &to_json_bytes(&point))?;
            Ok(point)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    names.into_iter().for_each(|n| run.record_output(n));

    let table = match knob.problem() {
        ProblemKind::EvHvac => {
            let mut t = Table::new(&[knob.name(), "j_elec", "j_discomfort", "max_dev_c"]);
            for pt in &points {
                if let Metrics::Schedule(m) = &pt.metrics {
                    t.row(vec![pt.value.into(), m.j_elec.into(), m.j_discomfort.into(), m.max_dev_c.into()]);
                }
            }
            t
        }
        ProblemKind::MgBid => {
            let mut t = Table::new(&[
                knob.name(),
                "total_expected_profit",
                "expected_revenue",
                "total_costs",
                "expected_discomfort_penalty",
                "expected_bid_deviation_charge",
                "expected_renewable_curtailment_kwh",
            ]);
            for pt in &points {
                if let Metrics::Bidding(r) = &pt.metrics {
                    t.row(vec![
                        pt.value.into(),
                        r.total_expected_profit.into(),
                        r.expected_revenue.into(),
                        r.total_costs().into(),
                        r.expected_discomfort_penalty.into(),
                        r.expected_bid_deviation_charge.into(),
                        r.expected_renewable_curtailment_kwh.into(),
                    ]);
                }
            }
            t
        }
    };
    run.write("sweep.csv", &table.into_bytes())?;
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_knob_and_values() {
        let s: SweepSpec = "w=0.005, 0.01,0.1".parse().unwrap();
        assert_eq!(s.knob, Knob::W);
        assert_eq!(s.values, vec![0.005, 0.01, 0.1]);
        let s: SweepSpec = "p_gmax=1000".parse().unwrap();
        assert_eq!(s.knob, Knob::PGmax);
    }

    #[test]
    fn rejects_unknown_knobs_and_bad_values() {
        for bad in ["x=1", "w", "w=", "w=1,abc", "w=inf"] {
            assert!(matches!(bad.parse::<SweepSpec>(), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn every_knob_round_trips_its_name() {
        for k in Knob::ALL {
            assert_eq!(k.name().parse::<Knob>().unwrap(), k);
        }
    }
}
