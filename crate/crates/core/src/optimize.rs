//! Numerical search for the palindromic five-pulse block `S3` behind the
//! three-qubit CCZ gate, plus the least-squares driver shared with the
//! reference-gate calibration.
//!
//! `S3` must take each of the three effective two-level systems of the
//! blockaded three-atom space (`|001> <-> |00r>`, `|011> <-> |W2>`,
//! `|111> <-> |W3>`, couplings `1`, `sqrt 2`, `sqrt 3`) from its ground state to
//! its excited state. Applying it twice then returns every computational
//! state with a minus sign, except `|000>` which never couples.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{propagate, ErrorKind};
use crate::error::{Error, Result};
use crate::hilbert::{BlockadedBasis, Config};
use crate::metrics::{series_fit, susceptibilities, Evaluator, FidelityReport, Metric, SeriesFit, SusceptibilityTriple};
use crate::protocols::{ccz_doubled, ccz_sequence, ideal_model, S3Params, Sequence, TargetGate};

// ---------------------------------------------------------------------------
// least squares

pub(crate) struct LsqFit {
    pub x: Vec<f64>,
    /// Euclidean norm of the final residual vector.
    pub residual: f64,
    pub evaluations: usize,
}

struct Problem<F> {
    f: F,
    x: DVector<f64>,
    failed: std::cell::Cell<bool>,
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> Problem<F> {
    fn eval(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match (self.f)(x.as_slice()) {
            Ok(r) if r.iter().all(|v| v.is_finite()) => Some(DVector::from_vec(r)),
            _ => {
                self.failed.set(true);
                None
            }
        }
    }
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<F> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.x.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.x.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.eval(&self.x)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let n = self.x.len();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let h = 1e-7 * self.x[j].abs().max(1.0);
            let mut xp = self.x.clone();
            let mut xm = self.x.clone();
            xp[j] += h;
            xm[j] -= h;
            cols.push((self.eval(&xp)? - self.eval(&xm)?) / (2.0 * h));
        }
        Some(DMatrix::from_columns(&cols))
    }
}

/// Levenberg-Marquardt with a central-difference Jacobian; `patience` bounds
/// the number of residual evaluations to `patience * (n + 1)`.
pub(crate) fn least_squares<F>(f: F, x0: &[f64], patience: usize) -> Result<LsqFit>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let problem = Problem { f, x: DVector::from_column_slice(x0), failed: std::cell::Cell::new(false) };
    let (problem, report) = LevenbergMarquardt::new()
        .with_xtol(1e-15)
        .with_ftol(1e-15)
        .with_gtol(1e-15)
        .with_patience(patience)
        .minimize(problem);
    if problem.failed.get() {
        // surface the underlying error rather than a bare termination reason
        (problem.f)(problem.x.as_slice())?;
    }
    let r = problem.residuals().map(|r| r.norm()).unwrap_or(f64::INFINITY);
    Ok(LsqFit { x: problem.x.as_slice().to_vec(), residual: r, evaluations: report.number_of_evaluations })
}

// ---------------------------------------------------------------------------
// objective

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectiveReport {
    pub value: f64,
    /// `1 - |<top|S3|bottom>|^2` for the one-, two- and three-excitation blocks.
    pub deficits: [f64; 3],
}

const BLOCKS: [&str; 3] = ["001", "011", "111"];

/// Evaluates the mapping condition on the full 20-dimensional propagator.
pub fn s3_objective(params: &S3Params) -> Result<ObjectiveReport> {
    let basis = BlockadedBasis::new(3)?;
    let seq = Sequence::new("S3", 1, 3, params.pulses(), TargetGate::ccphase(PI));
    let u = propagate(&seq, &ideal_model(), false)?.u;
    let mut deficits = [0.0; 3];
    for (slot, name) in deficits.iter_mut().zip(BLOCKS) {
        let config = Config::parse(name).expect("valid configuration");
        let top = basis.coupled_state(&config).expect("coupled block");
        let col = u.column(basis.config_index(name)?).into_owned();
        *slot = 1.0 - top.0.dotc(&col).norm_sqr();
    }
    Ok(ObjectiveReport { value: deficits.iter().sum(), deficits })
}

/// `<bottom|S3|bottom>` of the three blocks in their two-level reduction,
/// where a pulse of area `a` and phase `x` rotates block `k` by `sqrt(k) a`.
fn block_returns(x: &[f64]) -> [Complex64; 3] {
    let p = S3Params::from_array([x[0], x[1], x[2], x[3], x[4]]);
    let pulses = [(p.alpha1, 0.0), (p.alpha2, p.xi2), (p.alpha3, p.xi3), (p.alpha2, p.xi2), (p.alpha1, 0.0)];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let g = ((k + 1) as f64).sqrt();
        // columns (bottom, top) of the 2x2 propagator
        let mut m = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
        for &(a, phi) in &pulses {
            let (s, c) = (0.5 * g * a).sin_cos();
            let off_up = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, phi);
            let off_dn = Complex64::new(0.0, -s) * Complex64::from_polar(1.0, -phi);
            let r = [[Complex64::new(c, 0.0), off_up], [off_dn, Complex64::new(c, 0.0)]];
            let mut next = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = r[i][0] * m[0][j] + r[i][1] * m[1][j];
                }
            }
            m = next;
        }
        *slot = m[0][0];
    }
    out
}

fn fast_objective(x: &[f64]) -> f64 {
    block_returns(x).iter().map(|z| z.norm_sqr()).sum()
}

fn return_residuals(x: &[f64]) -> Result<Vec<f64>> {
    Ok(block_returns(x).iter().flat_map(|z| [z.re, z.im]).collect())
}

// ---------------------------------------------------------------------------
// polish and search

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolishResult {
    pub params: S3Params,
    pub objective: f64,
    pub evaluations: usize,
}

/// Local Levenberg-Marquardt refinement of `start`.
pub fn polish(start: &S3Params) -> Result<PolishResult> {
    let fit = least_squares(return_residuals, &start.to_array(), 200)?;
    let mut x = [0.0; 5];
    x.copy_from_slice(&fit.x);
    let params = S3Params::from_array(x);
    let objective = s3_objective(&params)?.value;
    Ok(PolishResult { params, objective, evaluations: fit.evaluations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_iters: u64,
    /// Largest allowed pulse area.
    pub max_area: f64,
    pub tolerance: f64,
    pub target_duration: f64,
    /// Relative window around `target_duration` for branch selection.
    pub duration_window: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iters: 2000,
            max_area: 2.0 * PI * 1.2,
            tolerance: 1e-10,
            target_duration: 22.84,
            duration_window: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub params: S3Params,
    pub objective: f64,
    pub duration: f64,
    pub restart: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub params: S3Params,
    pub objective: f64,
    pub duration: f64,
    pub restart: usize,
    /// Valid solutions outside the duration window, found before the returned one.
    pub other_branches: Vec<Branch>,
}

struct BoxedObjective {
    max_area: f64,
}

impl BoxedObjective {
    /// Reflects areas into `(0, max_area]` and wraps phases into `[0, 2 pi)`.
    fn fold(&self, x: &[f64]) -> [f64; 5] {
        let period = 2.0 * self.max_area;
        let mut out = [0.0; 5];
        for (k, v) in x.iter().enumerate() {
            out[k] = if k < 3 {
                let r = v.rem_euclid(period);
                if r > self.max_area {
                    period - r
                } else {
                    r
                }
            } else {
                v.rem_euclid(2.0 * PI)
            };
        }
        out
    }
}

impl CostFunction for BoxedObjective {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(fast_objective(&self.fold(x)))
    }
}

fn simplex_search(x0: [f64; 5], opts: &SearchOptions) -> Result<[f64; 5]> {
    let problem = BoxedObjective { max_area: opts.max_area };
    let mut simplex = vec![x0.to_vec()];
    for k in 0..5 {
        let mut v = x0.to_vec();
        v[k] += 0.3;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let res = Executor::new(BoxedObjective { max_area: opts.max_area }, solver)
        .configure(|state| state.max_iters(opts.max_iters))
        .run()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let best = res.state.best_param.unwrap_or_else(|| x0.to_vec());
    Ok(problem.fold(&best))
}

/// Restarted simplex search from [`SearchOptions::default`].
pub fn search_s3(seed: u64) -> Result<SearchResult> {
    search_s3_with(seed, &SearchOptions::default())
}

/// Nelder-Mead from deterministic pseudo-random starts, each result refined by
/// [`polish`]. Returns the first solution below `tolerance` whose duration is
/// within the window around `target_duration`.
pub fn search_s3_with(seed: u64, opts: &SearchOptions) -> Result<SearchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut other = Vec::new();
    let mut best = f64::INFINITY;
    for restart in 0..opts.restarts {
        let mut x0 = [0.0; 5];
        for (k, v) in x0.iter_mut().enumerate() {
            *v = if k < 3 { rng.gen_range(0.0..opts.max_area) } else { rng.gen_range(0.0..2.0 * PI) };
        }
        let x = simplex_search(x0, opts)?;
        let polished = polish(&S3Params::from_array(x))?;
        best = best.min(polished.objective);
        let p = polished.params;
        if polished.objective >= opts.tolerance || p.alpha1 <= 0.0 || p.alpha2 <= 0.0 || p.alpha3 <= 0.0 {
            continue;
        }
        let params = S3Params { xi2: p.xi2.rem_euclid(2.0 * PI), xi3: p.xi3.rem_euclid(2.0 * PI), ..p };
        let duration = params.ccz_duration();
        let branch = Branch { params, objective: polished.objective, duration, restart };
        if (duration - opts.target_duration).abs() <= opts.duration_window * opts.target_duration {
            return Ok(SearchResult { params, objective: branch.objective, duration, restart, other_branches: other });
        }
        other.push(branch);
    }
    Err(Error::NoConvergence { what: format!("S3 search ({} restarts, {} off-window branches)", opts.restarts, other.len()), residual: best })
}

// ---------------------------------------------------------------------------
// verification

#[derive(Clone, Debug, PartialEq)]
pub struct CczReport {
    pub sequence: Sequence,
    pub fidelity: FidelityReport,
    pub intensity: SusceptibilityTriple,
    pub fit_c: SeriesFit,
    pub duration: f64,
}

fn report_for(sequence: Sequence) -> Result<CczReport> {
    let fidelity = Evaluator::new(&sequence)?.report(&ideal_model())?;
    let intensity = susceptibilities(&sequence, ErrorKind::Intensity)?;
    let fit_c = series_fit(&sequence, ErrorKind::Intensity, Metric::C, 2)?;
    let duration = sequence.nominal_duration();
    Ok(CczReport { sequence, fidelity, intensity, fit_c, duration })
}

/// `S3` twice with inter-block jump `pi - phi`, evaluated at zero error and
/// under intensity error.
pub fn verify_ccz(params: &S3Params, phi: f64) -> Result<CczReport> {
    if !(phi > 0.0 && phi <= 2.0 * PI) {
        return Err(Error::InvalidArgument(format!("gate phase {phi} outside (0, 2pi]")));
    }
    report_for(ccz_sequence(params, PI - phi))
}

/// The leakage-robust CCZ built from two `CC_{pi/2}` gates.
pub fn verify_ccz_doubled(params: &S3Params) -> Result<CczReport> {
    report_for(ccz_doubled(params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_objective_matches_full_propagation() {
        for p in [S3Params::PRINTED, S3Params::from_array([0.4, 2.2, 1.3, 0.8, 5.0])] {
            let full = s3_objective(&p).unwrap().value;
            assert!((full - fast_objective(&p.to_array())).abs() < 1e-12);
        }
    }

    #[test]
    fn printed_parameters_nearly_solve() {
        let r = s3_objective(&S3Params::PRINTED).unwrap();
        assert!(r.value < 1e-4, "{r:?}");
        let generic = S3Params::from_array([PI / 2.0, PI / 2.0, PI / 2.0, 0.0, 0.0]);
        assert!(s3_objective(&generic).unwrap().value > 0.1);
    }

    #[test]
    fn objective_ignores_global_phase() {
        let p = S3Params::from_array([0.4, 2.2, 1.3, 0.8, 5.0]);
        let a = s3_objective(&p).unwrap().value;
        let b = fast_objective(&[0.4, 2.2, 1.3, 0.8, 5.0]);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn polish_from_printed() {
        let r = polish(&S3Params::PRINTED).unwrap();
        assert!(r.objective < 1e-12, "{r:?}");
        for (a, b) in r.params.to_array().iter().zip(S3Params::PRINTED.to_array()) {
            assert!((a - b).abs() < 0.01);
        }
        let rep = verify_ccz(&r.params, PI).unwrap();
        assert!(1.0 - rep.fidelity.f < 1e-10);
        assert!(rep.intensity.chi_c.abs() < 1e-5);
    }

    #[test]
    fn doubled_construction_is_leakage_robust() {
        let p = polish(&S3Params::PRINTED).unwrap().params;
        let rep = verify_ccz_doubled(&p).unwrap();
        assert!(1.0 - rep.fidelity.f < 1e-10);
        assert!(rep.intensity.chi_p.abs() < 1e-5, "{:?}", rep.intensity);
        assert!((rep.duration - 45.7).abs() < 0.3);
    }
}
