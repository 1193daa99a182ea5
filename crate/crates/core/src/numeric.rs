//! Floating-point geodesic flow: fixed-step RK4 for Hamilton's equations,
//! evaluation of momentum polynomials along trajectories and polynomial
//! fits in the arclength parameter.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{rational_to_f64, MultiPoly, RationalFunction, DEFAULT_POLE_GUARD};
use crate::flow::{hamiltonian, MomentumPolynomial};
use crate::geometry::Chart;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("step must be positive and finite")]
    BadStep,
    #[error("state dimension does not match the chart")]
    BadShape,
    #[error("pole at trajectory sample {index}")]
    Pole { index: usize },
    #[error("initial state lies outside the chart domain")]
    OutsideDomain,
    #[error("fit needs matching lengths, k_max >= 1 and more distinct samples than coefficients")]
    DegenerateGrid,
    #[error("csv output failed: {0}")]
    Csv(String),
}

/// Point `(x, p)` of the cotangent bundle at arclength `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub s: f64,
}

struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    fn new(p: &MultiPoly) -> Self {
        CompiledPoly {
            terms: p
                .terms()
                .map(|(m, c)| {
                    let pows =
                        m.exponents().iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as i32)).collect();
                    (rational_to_f64(c), pows)
                })
                .collect(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, pows)| pows.iter().fold(*c, |acc, &(i, e)| acc * x[i].powi(e))).sum()
    }
}

struct CompiledRf {
    num: CompiledPoly,
    den: Option<CompiledPoly>,
}

impl CompiledRf {
    fn new(f: &RationalFunction) -> Self {
        CompiledRf { num: CompiledPoly::new(f.num()), den: (!f.den().is_one()).then(|| CompiledPoly::new(f.den())) }
    }

    fn eval(&self, x: &[f64]) -> Option<f64> {
        let n = self.num.eval(x);
        match &self.den {
            None => Some(n),
            Some(d) => {
                let dv = d.eval(x);
                (dv.abs() > DEFAULT_POLE_GUARD * n.abs().max(1.0) && dv.is_finite()).then(|| n / dv)
            }
        }
    }
}

/// Momentum polynomial prepared for repeated floating evaluation.
pub struct CompiledMomentumPoly {
    terms: Vec<(Vec<(usize, i32)>, CompiledRf)>,
}

impl CompiledMomentumPoly {
    pub fn new(f: &MomentumPolynomial) -> Self {
        CompiledMomentumPoly {
            terms: f
                .terms()
                .map(|(m, c)| {
                    let pows =
                        m.exponents().iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as i32)).collect();
                    (pows, CompiledRf::new(c))
                })
                .collect(),
        }
    }

    /// `None` at a pole of some coefficient.
    pub fn eval(&self, x: &[f64], p: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (pows, c) in &self.terms {
            let mono = pows.iter().fold(1.0, |a, &(i, e)| a * p[i].powi(e));
            acc += c.eval(x)? * mono;
        }
        Some(acc)
    }
}

/// Hamilton's equations `ẋ = ∂𝓗/∂p`, `ṗ = −∂𝓗/∂x` in compiled form.
pub struct GeodesicField {
    dim: usize,
    energy: CompiledMomentumPoly,
    dh_dp: Vec<CompiledMomentumPoly>,
    dh_dx: Vec<CompiledMomentumPoly>,
}

impl GeodesicField {
    pub fn new(chart: &Chart) -> Self {
        let h = hamiltonian(chart);
        let n = chart.dim();
        GeodesicField {
            dim: n,
            energy: CompiledMomentumPoly::new(&h),
            dh_dp: (0..n).map(|i| CompiledMomentumPoly::new(&h.partial_p(i))).collect(),
            dh_dx: (0..n).map(|i| CompiledMomentumPoly::new(&h.partial_x(i))).collect(),
        }
    }

    pub fn energy(&self, x: &[f64], p: &[f64]) -> Option<f64> {
        self.energy.eval(x, p)
    }

    fn rhs(&self, x: &[f64], p: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut dx = Vec::with_capacity(self.dim);
        let mut dp = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            dx.push(self.dh_dp[i].eval(x, p)?);
            dp.push(-self.dh_dx[i].eval(x, p)?);
        }
        Some((dx, dp))
    }

    fn rk4(&self, st: &FlowState, h: f64) -> Option<FlowState> {
        let axpy = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + t * v).collect() };
        let (k1x, k1p) = self.rhs(&st.x, &st.p)?;
        let (k2x, k2p) = self.rhs(&axpy(&st.x, &k1x, h / 2.0), &axpy(&st.p, &k1p, h / 2.0))?;
        let (k3x, k3p) = self.rhs(&axpy(&st.x, &k2x, h / 2.0), &axpy(&st.p, &k2p, h / 2.0))?;
        let (k4x, k4p) = self.rhs(&axpy(&st.x, &k3x, h), &axpy(&st.p, &k3p, h))?;
        let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..y.len()).map(|i| y[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
        };
        let x = combine(&st.x, &k1x, &k2x, &k3x, &k4x);
        let p = combine(&st.p, &k1p, &k2p, &k3p, &k4p);
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return None;
        }
        Some(FlowState { x, p, s: st.s + h })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    /// The integration stopped early at a pole of the metric data.
    pub truncated: bool,
    /// `(max 𝓗 − min 𝓗) / max(|𝓗|, 1)` over the samples.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn s_grid(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.s).collect()
    }
}

/// Classical fixed-step RK4; samples every step including the initial state.
pub fn integrate_geodesic(chart: &Chart, init: &FlowState, s_max: f64, step: f64) -> Result<Trajectory, NumericError> {
    integrate_with(&GeodesicField::new(chart), init, s_max, step)
}

pub fn integrate_with(
    field: &GeodesicField,
    init: &FlowState,
    s_max: f64,
    step: f64,
) -> Result<Trajectory, NumericError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(NumericError::BadStep);
    }
    if init.x.len() != field.dim || init.p.len() != field.dim {
        return Err(NumericError::BadShape);
    }
    let e0 = field.energy(&init.x, &init.p).ok_or(NumericError::OutsideDomain)?;
    let steps = ((s_max - init.s) / step).round().max(0.0) as usize;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(init.clone());
    let (mut emin, mut emax) = (e0, e0);
    let mut truncated = false;
    for _ in 0..steps {
        let next = field.rk4(states.last().unwrap(), step).and_then(|st| field.energy(&st.x, &st.p).map(|e| (st, e)));
        match next {
            Some((st, e)) => {
                emin = emin.min(e);
                emax = emax.max(e);
                states.push(st);
            }
            None => {
                truncated = true;
                break;
            }
        }
    }
    let energy_drift = (emax - emin) / emax.abs().max(emin.abs()).max(1.0);
    Ok(Trajectory { states, truncated, energy_drift })
}

/// Values of `f` at every sample.
pub fn eval_along(f: &MomentumPolynomial, traj: &Trajectory) -> Result<Vec<f64>, NumericError> {
    let c = CompiledMomentumPoly::new(f);
    traj.states.iter().enumerate().map(|(i, st)| c.eval(&st.x, &st.p).ok_or(NumericError::Pole { index: i })).collect()
}

/// `(max − min) / max(max |f|, 1)`.
pub fn relative_variation(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    (max - min) / scale
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub fitted_degree: usize,
    pub residual_rms: f64,
    /// Coefficients of `s^0, s^1, …` of the selected fit.
    pub coefficients: Vec<f64>,
}

pub const DEFAULT_FIT_TOL: f64 = 1e-6;

/// Least-squares fits of degree `0, 1, …, k_max − 1`; the first with RMS
/// residual below `tol` is reported, otherwise the degree `k_max − 1` fit.
pub fn fit_poly_in_s(values: &[f64], s: &[f64], k_max: usize, tol: f64) -> Result<FitReport, NumericError> {
    if values.len() != s.len() || k_max == 0 || !(tol > 0.0) {
        return Err(NumericError::DegenerateGrid);
    }
    let mut distinct: Vec<f64> = s.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < k_max {
        return Err(NumericError::DegenerateGrid);
    }
    // centre and scale the grid for conditioning
    let lo = distinct[0];
    let hi = *distinct.last().unwrap();
    let mid = (lo + hi) / 2.0;
    let half = ((hi - lo) / 2.0).max(f64::MIN_POSITIVE);
    let u: Vec<f64> = s.iter().map(|v| (v - mid) / half).collect();
    let y = DVector::from_column_slice(values);
    let mut last = None;
    for deg in 0..k_max {
        let a = DMatrix::from_fn(u.len(), deg + 1, |i, j| u[i].powi(j as i32));
        let svd = a.clone().svd(true, true);
        let c = svd.solve(&y, 1e-14).map_err(|_| NumericError::DegenerateGrid)?;
        let r = &a * &c - &y;
        let rms = (r.norm_squared() / u.len() as f64).sqrt();
        let report =
            FitReport { fitted_degree: deg, residual_rms: rms, coefficients: to_s_basis(c.as_slice(), mid, half) };
        if rms < tol {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("k_max >= 1"))
}

/// Re-expands `Σ c_j ((s − a)/b)^j` in powers of `s`.
fn to_s_basis(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    // (s − a)^j / b^j via binomial coefficients
    for (j, cj) in c.iter().enumerate() {
        let mut binom = 1.0;
        for i in 0..=j {
            out[i] += cj * binom * (-a).powi((j - i) as i32) / b.powi(j as i32);
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
    }
    out
}

/// Initial data with coordinates uniform in `ranges`, momenta Gaussian-like
/// and then rescaled to unit energy (`𝓗 = ½`).
pub fn random_unit_state(field: &GeodesicField, ranges: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Option<FlowState> {
    let x: Vec<f64> = ranges.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
    let p: Vec<f64> = (0..ranges.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let e = field.energy(&x, &p)?;
    if !(e > 1e-8) {
        return None;
    }
    let scale = (0.5 / e).sqrt();
    Some(FlowState { x, p: p.into_iter().map(|v| v * scale).collect(), s: 0.0 })
}

/// `count` accepted unit-energy states from a seeded generator.
pub fn sample_states<F>(
    field: &GeodesicField,
    ranges: &[(f64, f64)],
    count: usize,
    seed: u64,
    accept: F,
) -> Vec<FlowState>
where
    F: Fn(&FlowState) -> bool,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if let Some(st) = random_unit_state(field, ranges, &mut rng) {
            if accept(&st) {
                out.push(st);
            }
        }
    }
    out
}

/// Sampling and integration parameters for trajectory batches.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchConfig {
    pub ranges: Vec<(f64, f64)>,
    pub count: usize,
    pub seed: u64,
    pub s_max: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct Batch {
    pub trajectories: Vec<Trajectory>,
    /// Initial states discarded because the trajectory met a pole.
    pub rejected: usize,
}

/// `count` unit-energy trajectories from seeded initial data passing
/// `accept`. Trajectories that stop at a pole, or on which some of `watch`
/// cannot be evaluated, are replaced by fresh draws. Output order depends
/// only on the seed.
pub fn sample_trajectories<F>(
    field: &GeodesicField,
    cfg: &BatchConfig,
    accept: F,
    watch: &[MomentumPolynomial],
) -> Result<Batch, NumericError>
where
    F: Fn(&FlowState) -> bool,
{
    if cfg.ranges.len() != field.dim {
        return Err(NumericError::BadShape);
    }
    let watch: Vec<CompiledMomentumPoly> = watch.iter().map(CompiledMomentumPoly::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut trajectories = Vec::with_capacity(cfg.count);
    let mut rejected = 0;
    let max_draws = 1000 * cfg.count.max(1);
    let mut draws = 0;
    while trajectories.len() < cfg.count {
        let need = cfg.count - trajectories.len();
        let mut inits = Vec::with_capacity(need);
        while inits.len() < need {
            draws += 1;
            if draws > max_draws {
                return Err(NumericError::OutsideDomain);
            }
            if let Some(st) = random_unit_state(field, &cfg.ranges, &mut rng) {
                if accept(&st) {
                    inits.push(st);
                }
            }
        }
        let chunk = need.div_ceil(threads);
        let results: Vec<Result<Trajectory, NumericError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = inits
                .chunks(chunk)
                .map(|part| {
                    let watch = &watch;
                    scope.spawn(move || {
                        part.iter()
                            .map(|init| integrate_with(field, init, cfg.s_max, cfg.step))
                            .map(|r| {
                                r.map(|t| {
                                    let ok = !t.truncated
                                        && t.states
                                            .iter()
                                            .all(|st| watch.iter().all(|w| w.eval(&st.x, &st.p).is_some()));
                                    (t, ok)
                                })
                            })
                            .map(|r| {
                                r.and_then(|(t, ok)| if ok { Ok(t) } else { Err(NumericError::Pole { index: 0 }) })
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("integration thread panicked")).collect()
        });
        for r in results {
            match r {
                Ok(t) => trajectories.push(t),
                Err(NumericError::Pole { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(Batch { trajectories, rejected })
}

/// Per-trajectory rows for `f`, fitted with polynomials of degree below `k_max`.
pub fn quantity_records(
    name: &str,
    f: &MomentumPolynomial,
    trajectories: &[Trajectory],
    k_max: usize,
    tol: f64,
) -> Result<Vec<QuantityRecord>, NumericError> {
    trajectories
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let v = eval_along(f, t)?;
            let fit = fit_poly_in_s(&v, &t.s_grid(), k_max, tol)?;
            Ok(QuantityRecord::new(i, name, &v, &fit))
        })
        .collect()
}

/// One row of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantityRecord {
    pub trajectory_id: usize,
    pub quantity: String,
    pub min: f64,
    pub max: f64,
    pub rel_drift: f64,
    pub fitted_degree: usize,
    pub residual_rms: f64,
}

impl QuantityRecord {
    pub fn new(trajectory_id: usize, quantity: &str, values: &[f64], fit: &FitReport) -> Self {
        QuantityRecord {
            trajectory_id,
            quantity: quantity.to_string(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            rel_drift: relative_variation(values),
            fitted_degree: fit.fitted_degree,
            residual_rms: fit.residual_rms,
        }
    }
}

pub fn write_csv<W: Write>(records: &[QuantityRecord], out: W) -> Result<(), NumericError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| NumericError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| NumericError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricChart;

    fn example_r3() -> Chart {
        MetricChart::diagonal("ex", &["r", "theta", "z"], &["1", "r^2/(1+r^2)", "1/(1+r^2)"], "r > 0").unwrap()
    }

    #[test]
    fn straight_lines_in_the_plane() {
        let e2 = MetricChart::euclidean("e2", &["x1", "x2"]);
        let init = FlowState { x: vec![1.0, 2.0], p: vec![1.0, 0.0], s: 0.0 };
        let t = integrate_geodesic(&e2, &init, 2.0, 0.01).unwrap();
        let last = t.states.last().unwrap();
        assert!((last.s - 2.0).abs() < 1e-12);
        assert!((last.x[0] - 3.0).abs() < 1e-12 && (last.x[1] - 2.0).abs() < 1e-12);
        assert!(t.energy_drift < 1e-15);
    }

    #[test]
    fn energy_and_angular_momentum_conserved() {
        let m = example_r3();
        let init = FlowState { x: vec![1.0, 0.0, 0.0], p: vec![0.3, 0.4, 0.5], s: 0.0 };
        let t = integrate_geodesic(&m, &init, 10.0, 1e-3).unwrap();
        assert!(!t.truncated);
        assert!(t.energy_drift < 1e-10, "{}", t.energy_drift);
        let ptheta = eval_along(&MomentumPolynomial::momentum(&m, 1), &t).unwrap();
        assert!(relative_variation(&ptheta) < 1e-10);
    }

    #[test]
    fn axis_direction_energy_drift() {
        let m = example_r3();
        let init = FlowState { x: vec![1.0, 0.0, 0.0], p: vec![0.0, 0.0, 0.5], s: 0.0 };
        let t = integrate_geodesic(&m, &init, 10.0, 1e-3).unwrap();
        assert!(t.energy_drift < 1e-10);
    }

    #[test]
    fn omega_is_affine_along_geodesics() {
        let m = example_r3();
        let f = MomentumPolynomial::parse(&m, "r*p_r + 2*z*p_z").unwrap();
        let field = GeodesicField::new(&m);
        let init = sample_states(&field, &[(0.5, 2.0), (0.0, 6.0), (-1.0, 1.0)], 1, 7, |s| s.p[1].abs() > 0.2);
        let t = integrate_with(&field, &init[0], 10.0, 1e-3).unwrap();
        let v = eval_along(&f, &t).unwrap();
        let fit = fit_poly_in_s(&v, &t.s_grid(), 3, DEFAULT_FIT_TOL).unwrap();
        assert_eq!(fit.fitted_degree, 1);
        assert!(fit.residual_rms < 1e-6);
    }

    #[test]
    fn fit_degrees() {
        let s: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let c: Vec<f64> = s.iter().map(|_| 3.0).collect();
        let fit = fit_poly_in_s(&c, &s, 3, DEFAULT_FIT_TOL).unwrap();
        assert_eq!(fit.fitted_degree, 0);
        assert!(fit.residual_rms < 1e-12);
        // x(s)² along x = 1 + s/2
        let q: Vec<f64> = s.iter().map(|v| (1.0 + v / 2.0).powi(2)).collect();
        let fit = fit_poly_in_s(&q, &s, 4, DEFAULT_FIT_TOL).unwrap();
        assert_eq!(fit.fitted_degree, 2);
        for (got, want) in fit.coefficients.iter().zip([1.0, 1.0, 0.25]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(fit_poly_in_s(&q, &s[..3], 4, 1e-6), Err(NumericError::DegenerateGrid));
        assert_eq!(fit_poly_in_s(&[1.0, 1.0], &[0.0, 0.0], 2, 1e-6), Err(NumericError::DegenerateGrid));
    }

    #[test]
    fn pole_truncates_trajectory() {
        let m = example_r3();
        // aimed straight at the axis r = 0 with no angular momentum
        let init = FlowState { x: vec![0.5, 0.0, 0.0], p: vec![-1.0, 0.0, 0.0], s: 0.0 };
        let t = integrate_geodesic(&m, &init, 2.0, 1e-3).unwrap();
        let f = MomentumPolynomial::parse(&m, "p_theta^2/r^2").unwrap();
        let v = eval_along(&f, &t);
        assert!(t.truncated || v.is_err() || t.states.iter().all(|s| s.x[0].abs() > 1e-7));
        assert!(integrate_geodesic(&m, &init, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_report_has_header() {
        let fit = FitReport { fitted_degree: 0, residual_rms: 0.0, coefficients: vec![1.0] };
        let rec = QuantityRecord::new(3, "H", &[0.5, 0.5], &fit);
        let mut buf = Vec::new();
        write_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .starts_with("trajectory_id,quantity,min,max,rel_drift,fitted_degree,residual_rms\n3,H,0.5,0.5,0.0,0,0.0"));
    }
}
