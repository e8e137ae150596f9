//! Hamiltonian construction, pulse exponentials and sequence propagation.
//!
//! Natural units are used throughout: the nominal Rabi frequency is 1 and
//! times are in units of its inverse. A pulse of area `a` at nominal Rabi
//! frequency `rabi` lasts `a / rabi`; an intensity error rescales the Rabi
//! frequency but not the duration.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AtomLevel, BlockadedBasis, CMatrix, Config, StateVector};
use crate::protocols::Sequence;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct DriveSpec {
    pub rabi: f64,
    /// Laser phase in radians.
    pub phase: f64,
    /// Which atoms the laser addresses.
    pub mask: Vec<bool>,
}

impl DriveSpec {
    pub fn global(phase: f64, n_atoms: usize) -> Self {
        Self { rabi: 1.0, phase, mask: vec![true; n_atoms] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DopplerSign {
    Plus,
    Minus,
}

impl DopplerSign {
    pub fn value(self) -> f64 {
        match self {
            DopplerSign::Plus => 1.0,
            DopplerSign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            DopplerSign::Plus => DopplerSign::Minus,
            DopplerSign::Minus => DopplerSign::Plus,
        }
    }
}

/// A square resonant (or, for reference gates, fixed-detuning) pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec {
    /// Pulse area `rabi * t` in radians.
    pub area: f64,
    pub drive: DriveSpec,
    /// Nominal detuning, part of the ideal Hamiltonian. Zero for all the
    /// resonant protocols.
    pub detuning: f64,
    /// Sign of the Doppler detuning error during this pulse.
    pub doppler: DopplerSign,
    /// A Doppler inversion event happens right before this pulse.
    pub inversion_before: bool,
}

impl PulseSpec {
    pub fn global(area: f64, phase: f64, n_atoms: usize) -> Self {
        Self {
            area,
            drive: DriveSpec::global(phase, n_atoms),
            detuning: 0.0,
            doppler: DopplerSign::Plus,
            inversion_before: false,
        }
    }

    pub fn duration(&self) -> f64 {
        self.area / self.drive.rabi
    }

    pub fn with_phase_shift(mut self, shift: f64) -> Self {
        self.drive.phase += shift;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    /// Relative Rabi frequency error, `rabi -> rabi (1 + eps)`.
    Intensity,
    /// Equal Doppler detuning `eps * rabi` on every atom.
    SymDetuning,
    /// Opposite Doppler detunings `+eps * rabi` and `-eps * rabi` on the two atoms.
    AntisymDetuning,
    /// Laser phase offset `eps` on every pulse after the first Doppler inversion.
    PositionalPhase,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 4] = [
        ErrorKind::Intensity,
        ErrorKind::SymDetuning,
        ErrorKind::AntisymDetuning,
        ErrorKind::PositionalPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Intensity => "intensity",
            ErrorKind::SymDetuning => "sym_detuning",
            ErrorKind::AntisymDetuning => "antisym_detuning",
            ErrorKind::PositionalPhase => "positional_phase",
        }
    }

    pub fn supports(self, n_atoms: usize) -> bool {
        !(self == ErrorKind::AntisymDetuning && n_atoms != 2)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" | "int" => Ok(ErrorKind::Intensity),
            "sym" | "sym_detuning" | "symmetric" => Ok(ErrorKind::SymDetuning),
            "antisym" | "antisym_detuning" | "antisymmetric" => Ok(ErrorKind::AntisymDetuning),
            "positional" | "positional_phase" | "pos" => Ok(ErrorKind::PositionalPhase),
            _ => Err(Error::InvalidArgument(format!("unknown error kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub epsilon: f64,
}

impl ErrorModel {
    pub fn new(kind: ErrorKind, epsilon: f64) -> Self {
        Self { kind, epsilon }
    }
}

#[derive(Clone, Debug)]
pub struct UnitaryReport {
    pub u: CMatrix,
    /// `dU/d eps` at the evaluated `eps`, when requested.
    pub du: Option<CMatrix>,
    pub total_time: f64,
}

fn check_mask(basis: &BlockadedBasis, drive: &DriveSpec, detunings: &[f64]) -> Result<()> {
    let n = basis.n_atoms();
    if drive.mask.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: drive.mask.len() });
    }
    if detunings.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: detunings.len() });
    }
    Ok(())
}

/// Drive term with every coupling element multiplied by the `order`-th Taylor
/// coefficient of `exp(+-i eps)`. Order 0 is the plain drive Hamiltonian,
/// order 1 its derivative with respect to the laser phase.
fn coupling_term(basis: &BlockadedBasis, drive: &DriveSpec, order: u32) -> CMatrix {
    let d = basis.dim();
    let mut h = CMatrix::zeros(d, d);
    let fact: f64 = (1..=order).map(f64::from).product();
    let up = I.powu(order) / fact;
    let down = (-I).powu(order) / fact;
    let half = 0.5 * drive.rabi;
    let ket_bra = Complex64::from_polar(half, drive.phase);
    for (col, config) in basis.configs().iter().enumerate() {
        for atom in 0..basis.n_atoms() {
            if !drive.mask[atom] || config.0[atom] != AtomLevel::One {
                continue;
            }
            let mut excited = config.clone();
            excited.0[atom] = AtomLevel::Rydberg;
            if let Some(row) = basis.index_of(&excited) {
                // <..1..|H|..r..> = (rabi/2) e^{i phase}
                h[(col, row)] += ket_bra * up;
                h[(row, col)] += ket_bra.conj() * down;
            }
        }
    }
    h
}

fn detuning_term(basis: &BlockadedBasis, detunings: &[f64]) -> CMatrix {
    let d = basis.dim();
    let mut h = CMatrix::zeros(d, d);
    for (i, config) in basis.configs().iter().enumerate() {
        let shift: f64 = config
            .0
            .iter()
            .zip(detunings)
            .filter(|(l, _)| **l == AtomLevel::Rydberg)
            .map(|(_, d)| d)
            .sum();
        h[(i, i)] = Complex64::new(-shift, 0.0);
    }
    h
}

/// Blockaded Hamiltonian `sum_i (rabi/2)(e^{i phase}|1><r|_i + h.c.) - sum_i d_i |r><r|_i`
/// on the masked atoms. The interaction term is absent because doubly excited
/// states are not in the basis.
pub fn build_hamiltonian(basis: &BlockadedBasis, drive: &DriveSpec, detunings: &[f64]) -> Result<CMatrix> {
    check_mask(basis, drive, detunings)?;
    Ok(coupling_term(basis, drive, 0) + detuning_term(basis, detunings))
}

fn hermitian_deviation(h: &CMatrix) -> f64 {
    (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = hermitian_deviation(h);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// `exp(-i H t)` through the eigendecomposition of the Hermitian `H`.
pub fn pulse_unitary(h: &CMatrix, duration: f64) -> Result<CMatrix> {
    check_hermitian(h)?;
    if duration < 0.0 {
        return Err(Error::InvalidArgument(format!("negative duration {duration}")));
    }
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * duration));
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}

/// `exp(-i H t)` together with its derivative along `dH`.
///
/// This is the upper-right block of `exp(-i t [[H, dH], [0, H]])`, evaluated
/// in the eigenbasis of `H`, where it reduces to an elementwise product with
/// the divided differences of `exp(-i t lambda)`.
pub fn pulse_unitary_with_derivative(h: &CMatrix, dh: &CMatrix, duration: f64) -> Result<(CMatrix, CMatrix)> {
    check_hermitian(h)?;
    let d = h.nrows();
    if dh.nrows() != d || dh.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: dh.nrows() });
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let lambda = &eig.eigenvalues;
    let t = duration;
    let mut g = v.adjoint() * dh * v;
    for j in 0..d {
        for k in 0..d {
            let half_gap = 0.5 * t * (lambda[j] - lambda[k]);
            let sinc = if half_gap.abs() < 1e-8 { 1.0 - half_gap * half_gap / 6.0 } else { half_gap.sin() / half_gap };
            let mid = Complex64::from_polar(1.0, -0.5 * t * (lambda[j] + lambda[k]));
            g[(j, k)] *= -I * t * mid * sinc;
        }
    }
    let phases = lambda.map(|l| Complex64::from_polar(1.0, -l * t));
    let u = v * CMatrix::from_diagonal(&phases) * v.adjoint();
    let du = v * g * v.adjoint();
    Ok((u, du))
}

/// Maps a pulse and a set of simultaneous error models to the effective drive
/// and per-atom detunings. Detunings only act on atoms the pulse addresses:
/// an atom outside the laser mask has no laser frame to be detuned from.
pub fn apply_errors(
    pulse: &PulseSpec,
    models: &[ErrorModel],
    n_atoms: usize,
    after_inversion: bool,
) -> Result<(DriveSpec, Vec<f64>)> {
    if pulse.drive.mask.len() != n_atoms {
        return Err(Error::DimensionMismatch { expected: n_atoms, found: pulse.drive.mask.len() });
    }
    let nominal = pulse.drive.rabi;
    let s = pulse.doppler.value();
    let mut drive = pulse.drive.clone();
    let mut detunings = vec![pulse.detuning; n_atoms];
    for m in models {
        let eps = m.epsilon;
        match m.kind {
            ErrorKind::Intensity => drive.rabi += nominal * eps,
            ErrorKind::SymDetuning => detunings.iter_mut().for_each(|d| *d += eps * nominal * s),
            ErrorKind::AntisymDetuning => {
                if n_atoms != 2 {
                    return Err(Error::Unsupported(format!(
                        "antisymmetric detuning is only defined for 2 atoms, not {n_atoms}"
                    )));
                }
                detunings[0] += eps * nominal * s;
                detunings[1] -= eps * nominal * s;
            }
            ErrorKind::PositionalPhase => {
                if after_inversion {
                    drive.phase += eps;
                }
            }
        }
    }
    for (d, &on) in detunings.iter_mut().zip(&drive.mask) {
        if !on {
            *d = 0.0;
        }
    }
    Ok((drive, detunings))
}

pub fn apply_error(
    pulse: &PulseSpec,
    model: &ErrorModel,
    n_atoms: usize,
    after_inversion: bool,
) -> Result<(DriveSpec, Vec<f64>)> {
    apply_errors(pulse, std::slice::from_ref(model), n_atoms, after_inversion)
}

fn detuning_pattern(pulse: &PulseSpec, kind: ErrorKind, n_atoms: usize) -> Vec<f64> {
    let unit = pulse.drive.rabi * pulse.doppler.value();
    (0..n_atoms)
        .map(|i| {
            if !pulse.drive.mask[i] {
                0.0
            } else if kind == ErrorKind::AntisymDetuning && i == 1 {
                -unit
            } else {
                unit
            }
        })
        .collect()
}

/// Taylor coefficients `H_k` of the deformed Hamiltonian of one pulse along
/// the direction `eps_kind = w_kind s`, for `k = 0..=order`.
///
/// The drive factor is `(1 + w_int s) sum_k (w_pos s)^k C_k` with `C_k` the
/// `k`-th phase term, and detunings are linear in `s`.
fn generator_series(
    basis: &BlockadedBasis,
    pulse: &PulseSpec,
    direction: &[(ErrorKind, f64)],
    after_inversion: bool,
    order: usize,
) -> Result<Vec<CMatrix>> {
    let n = basis.n_atoms();
    let d = basis.dim();
    let weight = |kind: ErrorKind| direction.iter().filter(|(k, _)| *k == kind).map(|(_, w)| w).sum::<f64>();
    for (kind, _) in direction {
        if !kind.supports(n) {
            return Err(Error::Unsupported(format!("{kind} is not defined for {n} atoms")));
        }
    }
    let w_int = weight(ErrorKind::Intensity);
    let w_pos = if after_inversion { weight(ErrorKind::PositionalPhase) } else { 0.0 };
    let (drive, det) = apply_error(pulse, &ErrorModel::new(ErrorKind::Intensity, 0.0), n, after_inversion)?;
    let phase_terms: Vec<CMatrix> = (0..=order).map(|k| coupling_term(basis, &pulse.drive, k as u32) * Complex64::from(w_pos.powi(k as i32))).collect();
    let mut terms = vec![build_hamiltonian(basis, &drive, &det)?];
    for k in 1..=order {
        let mut term = &phase_terms[k] + &phase_terms[k - 1] * Complex64::from(w_int);
        if k == 1 {
            for (kind, w) in direction {
                if matches!(kind, ErrorKind::SymDetuning | ErrorKind::AntisymDetuning) {
                    term += detuning_term(basis, &detuning_pattern(pulse, *kind, n)) * Complex64::from(*w);
                }
            }
        }
        terms.push(term);
    }
    debug_assert!(terms.iter().all(|t| t.nrows() == d));
    Ok(terms)
}

/// `dH/d eps` of one pulse at the given error strength.
fn hamiltonian_derivative(
    basis: &BlockadedBasis,
    pulse: &PulseSpec,
    model: &ErrorModel,
    after_inversion: bool,
) -> Result<CMatrix> {
    let n = basis.n_atoms();
    let d = basis.dim();
    Ok(match model.kind {
        ErrorKind::Intensity => coupling_term(basis, &pulse.drive, 0),
        ErrorKind::SymDetuning | ErrorKind::AntisymDetuning => {
            if !model.kind.supports(n) {
                return Err(Error::Unsupported("antisymmetric detuning needs 2 atoms".into()));
            }
            detuning_term(basis, &detuning_pattern(pulse, model.kind, n))
        }
        ErrorKind::PositionalPhase if after_inversion => {
            let mut drive = pulse.drive.clone();
            drive.phase += model.epsilon;
            coupling_term(basis, &drive, 1)
        }
        ErrorKind::PositionalPhase => CMatrix::zeros(d, d),
    })
}

/// Inversion lineage of every pulse: true once any inversion event has occurred.
pub fn inversion_lineage(seq: &Sequence) -> Vec<bool> {
    let mut seen = false;
    seq.pulses
        .iter()
        .map(|p| {
            seen |= p.inversion_before;
            seen
        })
        .collect()
}

/// Total unitary of the sequence under one error model. Pulses are applied in
/// list order, so the first pulse is the rightmost factor of the product.
pub fn propagate(seq: &Sequence, model: &ErrorModel, with_derivative: bool) -> Result<UnitaryReport> {
    let basis = BlockadedBasis::new(seq.n_atoms)?;
    let d = basis.dim();
    let mut u = CMatrix::identity(d, d);
    let mut du = with_derivative.then(|| CMatrix::zeros(d, d));
    for (pulse, after) in seq.pulses.iter().zip(inversion_lineage(seq)) {
        let (drive, det) = apply_error(pulse, model, seq.n_atoms, after)?;
        let h = build_hamiltonian(&basis, &drive, &det)?;
        match du.as_mut() {
            Some(du) => {
                let dh = hamiltonian_derivative(&basis, pulse, model, after)?;
                let (up, dup) = pulse_unitary_with_derivative(&h, &dh, pulse.duration())?;
                *du = &dup * &u + &up * &*du;
                u = up * u;
            }
            None => u = pulse_unitary(&h, pulse.duration())? * u,
        }
    }
    Ok(UnitaryReport { u, du, total_time: seq.nominal_duration() })
}

/// Total unitary with several error models active at once.
pub fn propagate_with(seq: &Sequence, models: &[ErrorModel]) -> Result<CMatrix> {
    let basis = BlockadedBasis::new(seq.n_atoms)?;
    let d = basis.dim();
    let mut u = CMatrix::identity(d, d);
    for (pulse, after) in seq.pulses.iter().zip(inversion_lineage(seq)) {
        let (drive, det) = apply_errors(pulse, models, seq.n_atoms, after)?;
        let h = build_hamiltonian(&basis, &drive, &det)?;
        u = pulse_unitary(&h, pulse.duration())? * u;
    }
    Ok(u)
}

/// Taylor coefficients `U_k` of `U(eps) = sum_k eps^k U_k` around `eps = 0`,
/// for `k = 0..=order`.
///
/// Each pulse contributes the first block row of the exponential of the
/// block-Toeplitz generator `-i t [[H_0, H_1, ...], [0, H_0, ...], ...]`,
/// and pulses are chained by Cauchy products.
pub fn propagate_series(seq: &Sequence, kind: ErrorKind, order: usize) -> Result<Vec<CMatrix>> {
    propagate_series_along(seq, &[(kind, 1.0)], order)
}

/// [`propagate_series`] along a direction in error space: every listed error
/// is active with strength `w s`, and the expansion is in `s`.
pub fn propagate_series_along(seq: &Sequence, direction: &[(ErrorKind, f64)], order: usize) -> Result<Vec<CMatrix>> {
    let basis = BlockadedBasis::new(seq.n_atoms)?;
    let d = basis.dim();
    let blocks = order + 1;
    let mut total: Vec<CMatrix> = (0..blocks)
        .map(|k| if k == 0 { CMatrix::identity(d, d) } else { CMatrix::zeros(d, d) })
        .collect();
    for (pulse, after) in seq.pulses.iter().zip(inversion_lineage(seq)) {
        let terms = generator_series(&basis, pulse, direction, after, order)?;
        let t = pulse.duration();
        let mut m = CMatrix::zeros(blocks * d, blocks * d);
        for r in 0..blocks {
            for c in r..blocks {
                m.view_mut((r * d, c * d), (d, d)).copy_from(&(&terms[c - r] * (-I * t)));
            }
        }
        let e = m.exp();
        let step: Vec<CMatrix> = (0..blocks).map(|k| e.view((0, k * d), (d, d)).into_owned()).collect();
        total = (0..blocks)
            .map(|k| (0..=k).fold(CMatrix::zeros(d, d), |acc, j| acc + &step[j] * &total[k - j]))
            .collect();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochSample {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub subsystem: String,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<BlochSample>,
    /// `<z|U|z>` at the end of the sequence.
    pub final_amplitude: Complex64,
}

impl Trajectory {
    /// Phase picked up by the initial state, `<z|U|z> = e^{-i phase}`,
    /// wrapped to `(-pi, pi]`.
    pub fn accumulated_phase(&self) -> f64 {
        wrap_phase(-self.final_amplitude.arg())
    }

    /// Signed solid angle swept by the closed sample polygon, as seen from
    /// the sphere centre, wrapped to `(-2 pi, 2 pi]`.
    pub fn enclosed_solid_angle(&self) -> f64 {
        // Reference point chosen off every great circle the catalog visits.
        let r = normalize([0.3713, -0.5571, 0.7427]);
        let pts: Vec<[f64; 3]> = self.samples.iter().map(|s| [s.x, s.y, s.z]).collect();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let num = dot(r, cross(a, b));
            let den = 1.0 + dot(r, a) + dot(a, b) + dot(b, r);
            total += 2.0 * num.atan2(den);
        }
        let mut w = total % (4.0 * PI);
        if w > 2.0 * PI {
            w -= 4.0 * PI;
        } else if w <= -2.0 * PI {
            w += 4.0 * PI;
        }
        w
    }
}

pub fn wrap_phase(x: f64) -> f64 {
    let mut w = x.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn subsystem_label(initial: &Config) -> String {
    let n = initial.0.len();
    let up = match initial.ones() {
        1 => {
            let c: String = initial.0.iter().map(|l| if *l == AtomLevel::One { 'r' } else { l.symbol() }).collect();
            c
        }
        k if k == n && n == 2 => "W".to_string(),
        k => format!("W{k}"),
    };
    format!("{initial}|{up}")
}

/// Bloch-sphere trajectory of the effective two-level system that contains
/// `initial` (south pole) and its coupled Rydberg partner (north pole), at
/// `eps = 0`. The first sample is `t = 0`; each pulse then contributes
/// `samples_per_pulse` uniformly spaced points ending at the pulse boundary.
pub fn bloch_trajectory(seq: &Sequence, initial: &str, samples_per_pulse: usize) -> Result<Trajectory> {
    let basis = BlockadedBasis::new(seq.n_atoms)?;
    let config = Config::parse(initial)
        .filter(|c| c.0.len() == seq.n_atoms && c.is_computational())
        .ok_or_else(|| Error::UnknownState { name: initial.to_string(), n_atoms: seq.n_atoms })?;
    let north = basis
        .coupled_state(&config)
        .ok_or_else(|| Error::InvalidArgument(format!("state {initial} does not couple to the drive")))?;
    if samples_per_pulse == 0 {
        return Err(Error::InvalidArgument("samples_per_pulse must be positive".into()));
    }
    let south = basis.basis_state(basis.config_index(initial)?);
    let label = subsystem_label(&config);

    let point = |psi: &StateVector, time: f64| {
        let a = south.inner(psi);
        let b = north.inner(psi);
        let ab = b.conj() * a;
        BlochSample {
            time,
            x: 2.0 * ab.re,
            y: 2.0 * ab.im,
            z: b.norm_sqr() - a.norm_sqr(),
            subsystem: label.clone(),
        }
    };

    let mut psi = south.clone();
    let mut samples = vec![point(&psi, 0.0)];
    let mut clock = 0.0;
    let ideal = crate::protocols::ideal_model();
    for (pulse, after) in seq.pulses.iter().zip(inversion_lineage(seq)) {
        let (drive, det) = apply_error(pulse, &ideal, seq.n_atoms, after)?;
        let h = build_hamiltonian(&basis, &drive, &det)?;
        let duration = pulse.duration();
        for k in 1..=samples_per_pulse {
            let t = duration * k as f64 / samples_per_pulse as f64;
            let state = StateVector(pulse_unitary(&h, t)? * &psi.0);
            samples.push(point(&state, clock + t));
        }
        psi = StateVector(pulse_unitary(&h, duration)? * &psi.0);
        clock += duration;
    }
    Ok(Trajectory { samples, final_amplitude: south.inner(&psi) })
}
