//! Gate fidelity `F`, return probability `P` and conditional fidelity `C = F/P`,
//! their susceptibilities and series coefficients in the error strength.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::{propagate, propagate_series_along, propagate_with, ErrorKind, ErrorModel};
use crate::error::{Error, Result};
use crate::hilbert::{BlockadedBasis, CMatrix, CVector, Projector};
use crate::protocols::{ideal_model, Sequence};

/// Positive half of the symmetric error grid used by [`series_fit`].
pub const FIT_GRID: [f64; 6] = [0.02, 0.03, 0.045, 0.0675, 0.1, 0.15];

/// Difference steps used by [`susceptibilities_richardson`].
pub const RICHARDSON_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Condition number above which a series fit is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    F,
    P,
    C,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F, Metric::P, Metric::C];

    pub fn of(self, r: &FidelityReport) -> f64 {
        match self {
            Metric::F => r.f,
            Metric::P => r.p,
            Metric::C => r.c,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::F => "F",
            Metric::P => "P",
            Metric::C => "C",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F" | "f" => Ok(Metric::F),
            "P" | "p" => Ok(Metric::P),
            "C" | "c" => Ok(Metric::C),
            _ => Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityReport {
    pub f: f64,
    pub p: f64,
    pub c: f64,
    pub epsilon: f64,
    pub kind: Option<ErrorKind>,
}

/// `F = [tr(P U P U^dag) + |tr(U P V^dag P)|^2] / (d (d + 1))`, `P = tr(P U P U^dag) / d`
/// and `C = F / P`, with `U = u_err` and `V = u_ideal`.
pub fn fidelity_triple(u_err: &CMatrix, u_ideal: &CMatrix, projector: &Projector, d: usize) -> Result<FidelityReport> {
    let p = projector.matrix();
    if u_err.shape() != p.shape() || u_ideal.shape() != p.shape() {
        return Err(Error::DimensionMismatch { expected: p.nrows(), found: u_err.nrows() });
    }
    let pu = p * u_err;
    let return_trace = (&pu * p * u_err.adjoint()).trace().re;
    let overlap = (&pu * p * u_ideal.adjoint() * p).trace().norm_sqr();
    let d = d as f64;
    let f = (return_trace + overlap) / (d * (d + 1.0));
    let ret = return_trace / d;
    if ret < 1e-300 {
        return Err(Error::InvalidArgument("return probability underflow".into()));
    }
    Ok(FidelityReport { f, p: ret, c: f / ret, epsilon: 0.0, kind: None })
}

/// Evaluates the metrics of a fixed sequence against its target gate.
///
/// For sequences flagged `local_phase_fix`, single-qubit Z phases are removed
/// with one diagonal correction computed from `U(0)` and applied unchanged at
/// every error strength.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    seq: &'a Sequence,
    projector: Projector,
    d: usize,
    target: CMatrix,
    correction: Option<CVector>,
}

impl<'a> Evaluator<'a> {
    pub fn new(seq: &'a Sequence) -> Result<Self> {
        let basis = BlockadedBasis::new(seq.n_atoms)?;
        let projector = basis.qubit_projector();
        let d = basis.qubit_indices().len();
        let target = seq.target.matrix(&basis)?;
        let correction = if seq.local_phase_fix {
            let u0 = propagate(seq, &ideal_model(), false)?.u;
            Some(local_phase_correction(&basis, &u0, &target))
        } else {
            None
        };
        Ok(Self { seq, projector, d, target, correction })
    }

    pub fn sequence(&self) -> &Sequence {
        self.seq
    }

    fn corrected(&self, u: CMatrix) -> CMatrix {
        match &self.correction {
            Some(c) => CMatrix::from_diagonal(c) * u,
            None => u,
        }
    }

    pub fn report_unitary(&self, u: CMatrix) -> Result<FidelityReport> {
        fidelity_triple(&self.corrected(u), &self.target, &self.projector, self.d)
    }

    pub fn report(&self, model: &ErrorModel) -> Result<FidelityReport> {
        let u = propagate(self.seq, model, false)?.u;
        let mut r = self.report_unitary(u)?;
        r.epsilon = model.epsilon;
        r.kind = Some(model.kind);
        Ok(r)
    }

    pub fn report_multi(&self, models: &[ErrorModel]) -> Result<FidelityReport> {
        self.report_unitary(propagate_with(self.seq, models)?)
    }

    pub fn metric(&self, kind: ErrorKind, metric: Metric, eps: f64) -> Result<f64> {
        Ok(metric.of(&self.report(&ErrorModel::new(kind, eps))?))
    }

    /// Taylor coefficients of `F`, `P` and `C` in `eps`, up to `order`.
    pub fn series(&self, kind: ErrorKind, order: usize) -> Result<MetricSeries> {
        self.series_along(&[(kind, 1.0)], order)
    }

    /// Taylor coefficients in `s` with every listed error at strength `w s`.
    pub fn series_along(&self, direction: &[(ErrorKind, f64)], order: usize) -> Result<MetricSeries> {
        let terms: Vec<CMatrix> = propagate_series_along(self.seq, direction, order)?
            .into_iter()
            .map(|u| self.corrected(u))
            .collect();
        let p = self.projector.matrix();
        let pt = p * self.target.adjoint() * p;
        let pu: Vec<CMatrix> = terms.iter().map(|u| p * u * p).collect();
        let b: Vec<Complex64> = terms.iter().map(|u| (u * &pt).trace()).collect();
        let d = self.d as f64;
        let mut f = Vec::with_capacity(order + 1);
        let mut ret = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut a = 0.0;
            let mut bb = 0.0;
            for j in 0..=n {
                a += (&pu[j] * terms[n - j].adjoint()).trace().re;
                bb += (b[j] * b[n - j].conj()).re;
            }
            f.push((a + bb) / (d * (d + 1.0)));
            ret.push(a / d);
        }
        let c = series_divide(&f, &ret);
        Ok(MetricSeries { f, p: ret, c })
    }
}

/// Diagonal phase `exp(i sum_i theta_i)` over the atoms not in `0`, where
/// `theta_i` aligns the phase of the single-excitation state of atom `i`
/// with the target.
fn local_phase_correction(basis: &BlockadedBasis, u0: &CMatrix, target: &CMatrix) -> CVector {
    let n = basis.n_atoms();
    let theta: Vec<f64> = (0..n)
        .map(|atom| {
            let name: String = (0..n).map(|k| if k == atom { '1' } else { '0' }).collect();
            let i = basis.config_index(&name).expect("computational state");
            target[(i, i)].arg() - u0[(i, i)].arg()
        })
        .collect();
    CVector::from_iterator(
        basis.dim(),
        basis.configs().iter().map(|c| {
            let phase: f64 = c
                .0
                .iter()
                .zip(&theta)
                .filter(|(l, _)| **l != crate::hilbert::AtomLevel::Zero)
                .map(|(_, t)| t)
                .sum();
            Complex64::from_polar(1.0, phase)
        }),
    )
}

fn series_divide(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(num.len());
    for n in 0..num.len() {
        let s: f64 = (1..=n).map(|k| den[k] * q[n - k]).sum();
        q.push((num[n] - s) / den[0]);
    }
    q
}

/// Taylor coefficients `m_k` of each metric, `metric(eps) = sum_k m_k eps^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    pub c: Vec<f64>,
}

impl MetricSeries {
    pub fn of(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::F => &self.f,
            Metric::P => &self.p,
            Metric::C => &self.c,
        }
    }

    /// Coefficients of `1 - metric(eps)`, the convention of the tables.
    pub fn deficit(&self, metric: Metric) -> Vec<f64> {
        self.of(metric)
            .iter()
            .enumerate()
            .map(|(k, &m)| if k == 0 { 1.0 - m } else { -m })
            .collect()
    }
}

/// Exact coefficients of `1 - metric(eps)` up to `order`.
pub fn series_expansion(seq: &Sequence, kind: ErrorKind, metric: Metric, order: usize) -> Result<Vec<f64>> {
    Ok(Evaluator::new(seq)?.series(kind, order)?.deficit(metric))
}

/// Signed second derivatives of `F`, `P` and `C` at zero error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SusceptibilityTriple {
    pub chi: f64,
    pub chi_p: f64,
    pub chi_c: f64,
}

impl SusceptibilityTriple {
    pub fn of(&self, metric: Metric) -> f64 {
        match metric {
            Metric::F => self.chi,
            Metric::P => self.chi_p,
            Metric::C => self.chi_c,
        }
    }
}

/// Susceptibilities from the exact second-order expansion of the unitary.
pub fn susceptibilities(seq: &Sequence, kind: ErrorKind) -> Result<SusceptibilityTriple> {
    let s = Evaluator::new(seq)?.series(kind, 2)?;
    Ok(SusceptibilityTriple { chi: 2.0 * s.f[2], chi_p: 2.0 * s.p[2], chi_c: 2.0 * s.c[2] })
}

fn richardson(estimates: &[f64]) -> f64 {
    // central differences with halved steps: error series in h^2, h^4, ...
    let mut table = estimates.to_vec();
    let mut factor = 4.0;
    while table.len() > 1 {
        table = table.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 4.0;
    }
    table[0]
}

/// Susceptibilities from Richardson-extrapolated central second differences
/// of the metrics, steps [`RICHARDSON_STEPS`].
pub fn susceptibilities_richardson(seq: &Sequence, kind: ErrorKind) -> Result<SusceptibilityTriple> {
    let ev = Evaluator::new(seq)?;
    let r0 = ev.report(&ErrorModel::new(kind, 0.0))?;
    let mut d = [Vec::new(), Vec::new(), Vec::new()];
    for h in RICHARDSON_STEPS {
        let rp = ev.report(&ErrorModel::new(kind, h))?;
        let rm = ev.report(&ErrorModel::new(kind, -h))?;
        for (slot, m) in d.iter_mut().zip(Metric::ALL) {
            slot.push((m.of(&rp) - 2.0 * m.of(&r0) + m.of(&rm)) / (h * h));
        }
    }
    Ok(SusceptibilityTriple { chi: richardson(&d[0]), chi_p: richardson(&d[1]), chi_c: richardson(&d[2]) })
}

/// Least-squares coefficients of `1 - metric(eps) = sum_k c_k eps^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesFit {
    pub metric: Metric,
    pub kind: ErrorKind,
    /// Even orders `2..=max_order`.
    pub coefficients: BTreeMap<usize, f64>,
    /// RMS residual of the fit.
    pub residual: f64,
    /// Positive half of the symmetric grid.
    pub grid: Vec<f64>,
    pub condition: f64,
    /// `max |metric(eps) - metric(-eps)|` over the grid.
    pub parity: f64,
}

impl SeriesFit {
    pub fn coefficient(&self, order: usize) -> f64 {
        self.coefficients.get(&order).copied().unwrap_or(0.0)
    }

    /// Lowest order whose coefficient exceeds `tol` in magnitude.
    pub fn leading(&self, tol: f64) -> Option<(usize, f64)> {
        self.coefficients.iter().find(|(_, c)| c.abs() > tol).map(|(&k, &c)| (k, c))
    }
}

/// Even-order fit of `1 - metric` over the symmetric grid `+-grid`.
///
/// The symmetric combination `(m(eps) + m(-eps)) / 2` removes odd orders
/// exactly. It is fitted with even powers up to `max_order + 4`; the two
/// orders above `max_order` absorb the truncation tail and are discarded.
pub fn series_fit_on(seq: &Sequence, kind: ErrorKind, metric: Metric, max_order: usize, grid: &[f64]) -> Result<SeriesFit> {
    if max_order < 2 || max_order % 2 != 0 {
        return Err(Error::InvalidArgument(format!("max_order must be even and >= 2, got {max_order}")));
    }
    let ev = Evaluator::new(seq)?;
    let orders: Vec<usize> = (2..=max_order + 4).step_by(2).collect();
    if grid.len() < orders.len() {
        return Err(Error::InvalidArgument(format!(
            "{} grid points cannot determine {} coefficients",
            grid.len(),
            orders.len()
        )));
    }
    let mut ys = Vec::with_capacity(grid.len());
    let mut parity: f64 = 0.0;
    for &e in grid {
        let plus = ev.metric(kind, metric, e)?;
        let minus = ev.metric(kind, metric, -e)?;
        parity = parity.max((plus - minus).abs());
        ys.push(1.0 - 0.5 * (plus + minus));
    }
    let mut a = DMatrix::<f64>::from_fn(grid.len(), orders.len(), |i, j| grid[i].powi(orders[j] as i32));
    let scales: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let y = DVector::from_vec(ys);
    let x = svd.solve(&y, 0.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let resid = &a * &x - &y;
    let residual = (resid.norm_squared() / grid.len() as f64).sqrt();
    let coefficients = orders
        .iter()
        .zip(x.iter().zip(&scales))
        .filter(|(&k, _)| k <= max_order)
        .map(|(&k, (&c, &s))| (k, c / s))
        .collect();
    Ok(SeriesFit { metric, kind, coefficients, residual, grid: grid.to_vec(), condition, parity })
}

/// Largest symmetric deficit tolerated at the outermost grid point before
/// [`series_fit`] shrinks the grid.
pub const FIT_DEFICIT_CAP: f64 = 0.02;

/// Maximum number of grid halvings in [`series_fit`].
pub const FIT_MAX_HALVINGS: usize = 4;

/// [`series_fit_on`] over [`FIT_GRID`], halved until the measured deficit at
/// the outermost point is below [`FIT_DEFICIT_CAP`]. Large coefficients go
/// with a small convergence radius, which the fixed grid would overshoot.
pub fn series_fit(seq: &Sequence, kind: ErrorKind, metric: Metric, max_order: usize) -> Result<SeriesFit> {
    let ev = Evaluator::new(seq)?;
    let mut scale = 1.0;
    for _ in 0..FIT_MAX_HALVINGS {
        let e = FIT_GRID[FIT_GRID.len() - 1] * scale;
        let deficit = 1.0 - 0.5 * (ev.metric(kind, metric, e)? + ev.metric(kind, metric, -e)?);
        if deficit <= FIT_DEFICIT_CAP {
            break;
        }
        scale *= 0.5;
    }
    let grid: Vec<f64> = FIT_GRID.iter().map(|e| e * scale).collect();
    series_fit_on(seq, kind, metric, max_order, &grid)
}

/// Mixed second derivative `d^2 F / d eps_i d eps_j` at zero, from exact
/// second-order expansions along `e_i`, `e_j` and `e_i + e_j`. For
/// `kind_i == kind_j` this is the ordinary second derivative.
pub fn cross_susceptibility(seq: &Sequence, kind_i: ErrorKind, kind_j: ErrorKind) -> Result<f64> {
    let ev = Evaluator::new(seq)?;
    let curvature = |direction: &[(ErrorKind, f64)]| -> Result<f64> { Ok(2.0 * ev.series_along(direction, 2)?.f[2]) };
    if kind_i == kind_j {
        return curvature(&[(kind_i, 1.0)]);
    }
    let both = curvature(&[(kind_i, 1.0), (kind_j, 1.0)])?;
    Ok(0.5 * (both - curvature(&[(kind_i, 1.0)])? - curvature(&[(kind_j, 1.0)])?))
}

/// [`cross_susceptibility`] from the four-point stencil at steps `h` and
/// `h/2` with one Richardson step.
pub fn cross_susceptibility_fd(seq: &Sequence, kind_i: ErrorKind, kind_j: ErrorKind) -> Result<f64> {
    let ev = Evaluator::new(seq)?;
    let f = |a: f64, b: f64| -> Result<f64> {
        Ok(ev.report_multi(&[ErrorModel::new(kind_i, a), ErrorModel::new(kind_j, b)])?.f)
    };
    let stencil = |h: f64| -> Result<f64> {
        Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h))
    };
    let h = 2e-3;
    Ok(richardson(&[stencil(h)?, stencil(h / 2.0)?]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{protocol_i, protocol_ii, protocol_iia, Variant};
    use std::f64::consts::PI;

    #[test]
    fn identical_unitaries_give_unity() {
        let seq = protocol_i(Variant::One, PI).unwrap();
        let ev = Evaluator::new(&seq).unwrap();
        let r = ev.report(&ideal_model()).unwrap();
        assert!((r.f - 1.0).abs() < 1e-12 && (r.p - 1.0).abs() < 1e-12 && (r.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn protocol_i_intensity_point() {
        // intensity errors are not symmetric in eps: a cubic term sits on top
        // of the quadratic one, and at eps = 0.05 it shifts F by about 1.2e-4
        let seq = protocol_i(Variant::One, PI).unwrap();
        let ev = Evaluator::new(&seq).unwrap();
        let e = 0.05;
        let plus = ev.metric(ErrorKind::Intensity, Metric::F, e).unwrap();
        let minus = ev.metric(ErrorKind::Intensity, Metric::F, -e).unwrap();
        assert!((0.5 * (plus + minus) - (1.0 - 1.878 * e * e)).abs() < 1e-4);
        let c = ev.series(ErrorKind::Intensity, 8).unwrap().f;
        let sum: f64 = c.iter().enumerate().map(|(k, v)| v * e.powi(k as i32)).sum();
        assert!((plus - sum).abs() < 1e-9);
        assert!((-c[3] - 0.922).abs() < 1e-3, "{}", c[3]);
    }

    #[test]
    fn global_phase_invariance() {
        let seq = protocol_ii(Variant::Two, PI).unwrap();
        let ev = Evaluator::new(&seq).unwrap();
        let u = propagate(&seq, &ErrorModel::new(ErrorKind::SymDetuning, 0.07), false).unwrap().u;
        let a = ev.report_unitary(u.clone()).unwrap();
        let b = ev.report_unitary(u * Complex64::from_polar(1.0, 1.234)).unwrap();
        assert!((a.f - b.f).abs() < 1e-14 && (a.p - b.p).abs() < 1e-14 && (a.c - b.c).abs() < 1e-14);
    }

    #[test]
    fn series_matches_direct_evaluation() {
        let seq = protocol_i(Variant::One, PI).unwrap();
        let ev = Evaluator::new(&seq).unwrap();
        let s = ev.series(ErrorKind::AntisymDetuning, 8).unwrap();
        let e = 0.01;
        let direct = ev.report(&ErrorModel::new(ErrorKind::AntisymDetuning, e)).unwrap();
        let sum = |c: &[f64]| c.iter().enumerate().map(|(k, v)| v * e.powi(k as i32)).sum::<f64>();
        assert!((sum(&s.f) - direct.f).abs() < 1e-13);
        assert!((sum(&s.p) - direct.p).abs() < 1e-13);
        assert!((sum(&s.c) - direct.c).abs() < 1e-13);
    }

    #[test]
    fn exact_and_richardson_susceptibilities_agree() {
        let seq = protocol_i(Variant::One, PI).unwrap();
        for kind in ErrorKind::ALL {
            let a = susceptibilities(&seq, kind).unwrap();
            let b = susceptibilities_richardson(&seq, kind).unwrap();
            for m in Metric::ALL {
                assert!((a.of(m) - b.of(m)).abs() < 1e-6, "{kind} {m}: {} vs {}", a.of(m), b.of(m));
            }
        }
        let chi = susceptibilities(&seq, ErrorKind::Intensity).unwrap();
        assert!((chi.chi + 2.0 * 1.878).abs() < 0.01);
        assert!(chi.chi_c.abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_sixth_order_leakage() {
        let seq = protocol_ii(Variant::One, PI).unwrap();
        let fit = series_fit(&seq, ErrorKind::Intensity, Metric::P, 6).unwrap();
        assert!(fit.coefficient(2).abs() < 1e-4 && fit.coefficient(4).abs() < 1e-4);
        assert!((fit.coefficient(6) - 1.944).abs() < 0.02, "{fit:?}");
        assert_eq!(fit.leading(1e-3).unwrap().0, 6);
    }

    #[test]
    fn fit_guards() {
        let seq = protocol_i(Variant::One, PI).unwrap();
        assert!(series_fit(&seq, ErrorKind::Intensity, Metric::F, 3).is_err());
        let tiny = [0.05; 6];
        assert!(matches!(
            series_fit_on(&seq, ErrorKind::Intensity, Metric::F, 2, &tiny),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn cross_term_consistency() {
        let seq = protocol_iia(Variant::One, PI).unwrap();
        let same = cross_susceptibility(&seq, ErrorKind::Intensity, ErrorKind::Intensity).unwrap();
        let chi = susceptibilities(&seq, ErrorKind::Intensity).unwrap().chi;
        assert!((same - chi).abs() < 1e-6, "{same} vs {chi}");
    }

    #[test]
    fn cross_terms_match_finite_differences() {
        let seq = protocol_i(Variant::Two, PI).unwrap();
        for (a, b) in [
            (ErrorKind::Intensity, ErrorKind::SymDetuning),
            (ErrorKind::SymDetuning, ErrorKind::AntisymDetuning),
            (ErrorKind::Intensity, ErrorKind::PositionalPhase),
        ] {
            let exact = cross_susceptibility(&seq, a, b).unwrap();
            let fd = cross_susceptibility_fd(&seq, a, b).unwrap();
            assert!((exact - fd).abs() < 1e-5 * (1.0 + exact.abs()), "{a}/{b}: {exact} vs {fd}");
        }
    }

    #[test]
    fn divide_series() {
        let q = series_divide(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]);
        assert_eq!(q, vec![1.0, 1.0, 0.0]);
        let q = series_divide(&[1.0, 0.0, 0.0, 0.0], &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(q, vec![1.0, 1.0, 1.0, 1.0]);
    }
}
