//! Third-order RC building model: indoor air, inner wall mass and envelope.

use nalgebra::{DMatrix, Matrix3, RowVector3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("invalid thermal parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HvacMode {
    Heating,
    Cooling,
}

impl HvacMode {
    /// +1 when heating, −1 when cooling.
    pub fn sign(self) -> f64 {
        match self {
            HvacMode::Heating => 1.0,
            HvacMode::Cooling => -1.0,
        }
    }
}

/// Resistances in °C/kW, capacitances in kWh/°C, window area in m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingThermalParams {
    pub r_a: f64,
    pub r_m: f64,
    pub r_e: f64,
    pub r_ea: f64,
    pub c_air: f64,
    pub c_m: f64,
    pub c_e: f64,
    pub window_area: f64,
    pub solar_fraction_walls: f64,
    pub cop: f64,
    pub mode: HvacMode,
}

impl Default for BuildingThermalParams {
    /// Synthetic single-family house with realistic magnitudes.
    fn default() -> Self {
        Self {
            r_a: 6.0,
            r_m: 0.5,
            r_e: 1.0,
            r_ea: 3.0,
            c_air: 1.5,
            c_m: 10.0,
            c_e: 5.0,
            window_area: 5.0,
            solar_fraction_walls: 0.6,
            cop: 3.0,
            mode: HvacMode::Cooling,
        }
    }
}

impl BuildingThermalParams {
    pub fn validate(&self) -> Result<(), ThermalError> {
        let positive = [
            ("r_a", self.r_a),
            ("r_m", self.r_m),
            ("r_e", self.r_e),
            ("r_ea", self.r_ea),
            ("c_air", self.c_air),
            ("c_m", self.c_m),
            ("c_e", self.c_e),
            ("cop", self.cop),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ThermalError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.window_area >= 0.0) || !self.window_area.is_finite() {
            return Err(ThermalError::InvalidParameter(format!(
                "window_area must be non-negative, got {}",
                self.window_area
            )));
        }
        if !(0.0..=1.0).contains(&self.solar_fraction_walls) {
            return Err(ThermalError::InvalidParameter(format!(
                "solar_fraction_walls must lie in [0, 1], got {}",
                self.solar_fraction_walls
            )));
        }
        Ok(())
    }

    /// Lumped equivalent of `count` identical buildings: conductances and
    /// capacities add, so resistances divide and everything else multiplies.
    pub fn aggregate(&self, count: f64) -> BuildingThermalParams {
        BuildingThermalParams {
            r_a: self.r_a / count,
            r_m: self.r_m / count,
            r_e: self.r_e / count,
            r_ea: self.r_ea / count,
            c_air: self.c_air * count,
            c_m: self.c_m * count,
            c_e: self.c_e * count,
            window_area: self.window_area * count,
            ..*self
        }
    }
}

/// `ẋ = a·x + b·u` with state `[t_in, t_m, t_e]` and input `[ambient, irradiance, heat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousThermalModel {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
    pub c: RowVector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteThermalModel {
    pub a_d: Matrix3<f64>,
    pub b_d: Matrix3<f64>,
    pub c_d: RowVector3<f64>,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_in: f64,
    pub t_m: f64,
    pub t_e: f64,
}

impl ThermalState {
    pub fn uniform(t: f64) -> Self {
        Self { t_in: t, t_m: t, t_e: t }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.t_in, self.t_m, self.t_e)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self { t_in: v[0], t_m: v[1], t_e: v[2] }
    }
}

/// Ambient in °C, irradiance in kW/m², HVAC electrical input in kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalInput {
    pub ambient: f64,
    pub irradiance: f64,
    pub hvac_power: f64,
}

pub fn build_continuous_model(p: &BuildingThermalParams) -> Result<ContinuousThermalModel, ThermalError> {
    p.validate()?;
    let a11 = -(1.0 / p.r_a + 1.0 / p.r_m + 1.0 / p.r_e) / p.c_air;
    let a12 = 1.0 / (p.r_m * p.c_air);
    let a13 = 1.0 / (p.r_e * p.c_air);
    let a21 = 1.0 / (p.r_m * p.c_m);
    let a22 = -1.0 / (p.r_m * p.c_m);
    let a31 = 1.0 / (p.r_e * p.c_e);
    let a33 = -(1.0 / p.r_ea + 1.0 / p.r_e) / p.c_e;
    #[rustfmt::skip]
    let a = Matrix3::new(
        a11, a12, a13,
        a21, a22, 0.0,
        a31, 0.0, a33,
    );
    let b11 = 1.0 / (p.r_a * p.c_air);
    let b12 = p.window_area * (1.0 - p.solar_fraction_walls) / p.c_air;
    let b13 = 1.0 / p.c_air;
    let b22 = p.window_area * p.solar_fraction_walls / p.c_m;
    let b31 = 1.0 / (p.r_ea * p.c_e);
    #[rustfmt::skip]
    let b = Matrix3::new(
        b11, b12, b13,
        0.0, b22, 0.0,
        b31, 0.0, 0.0,
    );
    Ok(ContinuousThermalModel { a, b, c: RowVector3::new(1.0, 0.0, 0.0) })
}

/// Scaling-and-squaring matrix exponential with a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0i32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as i32;
    }
    let scaled = m / 2f64.powi(squarings);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() <= 1e-18 * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Exact zero-order-hold discretization via the augmented block exponential
/// `exp([[a, b], [0, 0]]·t_s) = [[a_d, b_d], [0, I]]`.
pub fn discretize(cont: &ContinuousThermalModel, t_s: f64) -> Result<DiscreteThermalModel, ThermalError> {
    if !(t_s > 0.0) || !t_s.is_finite() {
        return Err(ThermalError::InvalidParameter(format!("sampling interval must be positive, got {t_s}")));
    }
    let mut aug = DMatrix::<f64>::zeros(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            aug[(i, j)] = cont.a[(i, j)] * t_s;
            aug[(i, j + 3)] = cont.b[(i, j)] * t_s;
        }
    }
    let e = expm(&aug);
    let a_d = Matrix3::from_fn(|i, j| e[(i, j)]);
    let b_d = Matrix3::from_fn(|i, j| e[(i, j + 3)]);
    Ok(DiscreteThermalModel { a_d, b_d, c_d: cont.c, t_s })
}

pub fn input_vector(mode: HvacMode, cop: f64, input: &ThermalInput) -> Vector3<f64> {
    Vector3::new(input.ambient, input.irradiance, mode.sign() * cop * input.hvac_power)
}

pub fn step(
    model: &DiscreteThermalModel,
    mode: HvacMode,
    cop: f64,
    state: ThermalState,
    input: &ThermalInput,
) -> ThermalState {
    let next = model.a_d * state.to_vector() + model.b_d * input_vector(mode, cop, input);
    ThermalState::from_vector(&next)
}

/// Trajectory including the initial state, one entry longer than `inputs`.
pub fn simulate(
    model: &DiscreteThermalModel,
    mode: HvacMode,
    cop: f64,
    initial: ThermalState,
    inputs: &[ThermalInput],
) -> Result<Vec<ThermalState>, ThermalError> {
    if inputs.is_empty() {
        return Err(ThermalError::InvalidParameter("input sequence is empty".into()));
    }
    let mut out = Vec::with_capacity(inputs.len() + 1);
    out.push(initial);
    let mut s = initial;
    for u in inputs {
        s = step(model, mode, cop, s, u);
        out.push(s);
    }
    Ok(out)
}

impl DiscreteThermalModel {
    pub fn from_params(p: &BuildingThermalParams, t_s: f64) -> Result<Self, ThermalError> {
        discretize(&build_continuous_model(p)?, t_s)
    }

    pub fn indoor(&self, s: &ThermalState) -> f64 {
        (self.c_d * s.to_vector())[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> BuildingThermalParams {
        BuildingThermalParams::default()
    }

    #[test]
    fn a12_direct_substitution() {
        let p = BuildingThermalParams { r_m: 2.0, c_air: 4.0, ..params() };
        let m = build_continuous_model(&p).unwrap();
        assert!((m.a[(0, 1)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn no_window_no_solar_path() {
        let p = BuildingThermalParams { window_area: 0.0, ..params() };
        let m = build_continuous_model(&p).unwrap();
        assert_eq!(m.b[(0, 1)], 0.0);
        assert_eq!(m.b[(1, 1)], 0.0);
    }

    #[test]
    fn all_solar_into_walls() {
        let p = BuildingThermalParams { solar_fraction_walls: 1.0, ..params() };
        let m = build_continuous_model(&p).unwrap();
        assert_eq!(m.b[(0, 1)], 0.0);
        assert!((m.b[(1, 1)] - p.window_area / p.c_m).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_resistance() {
        let p = BuildingThermalParams { r_e: 0.0, ..params() };
        assert!(build_continuous_model(&p).is_err());
        let p = BuildingThermalParams { c_m: -1.0, ..params() };
        assert!(build_continuous_model(&p).is_err());
    }

    #[test]
    fn compartmental_structure() {
        let m = build_continuous_model(&params()).unwrap();
        for i in 0..3 {
            assert!(m.a[(i, i)] <= 0.0);
            for j in 0..3 {
                if i != j {
                    assert!(m.a[(i, j)] >= 0.0);
                }
            }
            let row: f64 = (0..3).map(|j| m.a[(i, j)]).sum::<f64>() + m.b[(i, 0)];
            assert!(row.abs() < 1e-12, "row {i} sums to {row}");
        }
        assert_eq!(m.c, RowVector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn zero_dynamics_discretize_to_identity() {
        let cont = ContinuousThermalModel {
            a: Matrix3::zeros(),
            b: Matrix3::new(1.0, 2.0, 3.0, 0.0, 4.0, 0.0, 5.0, 0.0, 0.0),
            c: RowVector3::new(1.0, 0.0, 0.0),
        };
        let d = discretize(&cont, 0.25).unwrap();
        assert_eq!(d.a_d, Matrix3::identity());
        assert!((d.b_d - cont.b * 0.25).amax() < 1e-15);
    }

    #[test]
    fn scalar_exponential() {
        let e = expm(&DMatrix::from_element(1, 1, -0.5));
        assert!((e[(0, 0)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((e[(0, 0)] - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn rejects_nonpositive_sampling() {
        let cont = build_continuous_model(&params()).unwrap();
        assert!(discretize(&cont, 0.0).is_err());
        assert!(discretize(&cont, -1.0).is_err());
    }

    #[test]
    fn own_exponential_matches_pade_route() {
        let cont = build_continuous_model(&params()).unwrap();
        for t_s in [0.1, 0.5, 1.0, 3.0] {
            let mut aug = DMatrix::<f64>::zeros(6, 6);
            for i in 0..3 {
                for j in 0..3 {
                    aug[(i, j)] = cont.a[(i, j)] * t_s;
                    aug[(i, j + 3)] = cont.b[(i, j)] * t_s;
                }
            }
            let mine = expm(&aug);
            let reference = aug.clone().exp();
            let rel = (&mine - &reference).amax() / reference.amax();
            assert!(rel < 1e-10, "t_s {t_s}: relative difference {rel}");
        }
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let d = DiscreteThermalModel::from_params(&params(), 1.0).unwrap();
        let s = ThermalState::uniform(23.0);
        let u = ThermalInput { ambient: 23.0, irradiance: 0.0, hvac_power: 0.0 };
        let next = step(&d, HvacMode::Cooling, 3.0, s, &u);
        for (a, b) in [(next.t_in, 23.0), (next.t_m, 23.0), (next.t_e, 23.0)] {
            assert!((a - b).abs() < 1e-12);
        }
        let traj = simulate(&d, HvacMode::Cooling, 3.0, s, &[u; 5]).unwrap();
        assert_eq!(traj.len(), 6);
        assert!(traj.iter().all(|x| (x.t_in - 23.0).abs() < 1e-12));
    }

    #[test]
    fn cooling_lowers_indoor_temperature() {
        let d = DiscreteThermalModel::from_params(&params(), 1.0).unwrap();
        let s = ThermalState::uniform(23.0);
        let u = ThermalInput { ambient: 23.0, irradiance: 0.0, hvac_power: 2.0 };
        let next = step(&d, HvacMode::Cooling, 3.0, s, &u);
        assert!(next.t_in < 23.0);
        assert!(d.b_d[(0, 2)] > 0.0);
        let single = simulate(&d, HvacMode::Cooling, 3.0, s, &[u]).unwrap();
        assert_eq!(single[1], next);
    }

    #[test]
    fn empty_inputs_rejected() {
        let d = DiscreteThermalModel::from_params(&params(), 1.0).unwrap();
        assert!(simulate(&d, HvacMode::Heating, 3.0, ThermalState::uniform(20.0), &[]).is_err());
    }

    #[test]
    fn half_steps_compose_to_full_step() {
        let p = params();
        let full = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
        let half = DiscreteThermalModel::from_params(&p, 0.5).unwrap();
        let s = ThermalState { t_in: 26.0, t_m: 24.0, t_e: 30.0 };
        let u = ThermalInput { ambient: 33.0, irradiance: 0.7, hvac_power: 1.5 };
        let a = step(&full, p.mode, p.cop, s, &u);
        let b = simulate(&half, p.mode, p.cop, s, &[u, u]).unwrap()[2];
        assert!((a.t_in - b.t_in).abs() < 1e-9);
        assert!((a.t_m - b.t_m).abs() < 1e-9);
        assert!((a.t_e - b.t_e).abs() < 1e-9);
    }

    #[test]
    fn forward_euler_agrees_for_small_steps() {
        // first-order agreement: exp(a·h) ≈ I + a·h
        let cont = build_continuous_model(&params()).unwrap();
        let h = 1e-4;
        let d = discretize(&cont, h).unwrap();
        let euler_a = Matrix3::identity() + cont.a * h;
        let euler_b = cont.b * h;
        assert!((d.a_d - euler_a).amax() < 1e-6);
        assert!((d.b_d - euler_b).amax() < 1e-6);
    }

    fn arb_params() -> impl Strategy<Value = BuildingThermalParams> {
        (
            (1.0f64..10.0, 0.2f64..5.0, 0.5f64..10.0, 1.0f64..10.0),
            (1.0f64..20.0, 1.0f64..20.0, 1.0f64..20.0),
            (0.0f64..20.0, 0.0f64..1.0, 1.0f64..5.0),
            prop::bool::ANY,
        )
            .prop_map(|((r_a, r_m, r_e, r_ea), (c_air, c_m, c_e), (window_area, sf, cop), heat)| {
                BuildingThermalParams {
                    r_a,
                    r_m,
                    r_e,
                    r_ea,
                    c_air,
                    c_m,
                    c_e,
                    window_area,
                    solar_fraction_walls: sf,
                    cop,
                    mode: if heat { HvacMode::Heating } else { HvacMode::Cooling },
                }
            })
    }

    fn spectral_radius(m: &Matrix3<f64>) -> f64 {
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    proptest! {
        #[test]
        fn discrete_model_is_stable(p in arb_params(), t_s in 0.1f64..3.0) {
            let d = DiscreteThermalModel::from_params(&p, t_s).unwrap();
            prop_assert!(d.a_d.iter().all(|x| x.is_finite()));
            prop_assert!(spectral_radius(&d.a_d) < 1.0);
        }

        #[test]
        fn two_hour_step_is_two_one_hour_steps(p in arb_params()) {
            let one = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
            let two = DiscreteThermalModel::from_params(&p, 2.0).unwrap();
            let s = ThermalState { t_in: 22.0, t_m: 25.0, t_e: 28.0 };
            let u = ThermalInput { ambient: 31.0, irradiance: 0.5, hvac_power: 1.0 };
            let a = step(&two, p.mode, p.cop, s, &u);
            let b = simulate(&one, p.mode, p.cop, s, &[u, u]).unwrap()[2];
            prop_assert!((a.t_in - b.t_in).abs() < 1e-9);
            prop_assert!((a.t_e - b.t_e).abs() < 1e-9);
        }

        #[test]
        fn more_cooling_never_warms(p in arb_params(), base in 0.0f64..3.0, extra in 0.0f64..3.0, slot in 0usize..12) {
            let p = BuildingThermalParams { mode: HvacMode::Cooling, ..p };
            let d = DiscreteThermalModel::from_params(&p, 1.0).unwrap();
            let u = ThermalInput { ambient: 32.0, irradiance: 0.4, hvac_power: base };
            let lo = vec![u; 12];
            let mut hi = lo.clone();
            hi[slot].hvac_power += extra;
            let s = ThermalState::uniform(27.0);
            let a = simulate(&d, p.mode, p.cop, s, &lo).unwrap();
            let b = simulate(&d, p.mode, p.cop, s, &hi).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(y.t_in <= x.t_in + 1e-12);
            }
        }
    }
}
