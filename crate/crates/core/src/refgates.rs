//! Reference CZ gates: the locally addressed three-pulse gate and the global
//! two-pulse detuned gate, with a calibration solver for the latter.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, DopplerSign, DriveSpec, PulseSpec};
use crate::error::{Error, Result};
use crate::hilbert::BlockadedBasis;
use crate::optimize::least_squares;
use crate::protocols::{ideal_model, Sequence, TargetGate};

/// `pi` on atom 1, `2 pi` on atom 2, `pi` on atom 1, all resonant at phase 0.
pub fn jaksch_sequence() -> Sequence {
    let pulse = |area: f64, mask: [bool; 2]| PulseSpec {
        area,
        drive: DriveSpec { rabi: 1.0, phase: 0.0, mask: mask.to_vec() },
        detuning: 0.0,
        doppler: DopplerSign::Plus,
        inversion_before: false,
    };
    let pulses = vec![pulse(PI, [true, false]), pulse(2.0 * PI, [false, true]), pulse(PI, [true, false])];
    Sequence::new("Jaksch", 1, 2, pulses, TargetGate::cphase(PI))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevineParams {
    /// Nominal detuning in units of the Rabi frequency.
    pub detuning: f64,
    /// Area of each of the two pulses.
    pub area: f64,
    /// Laser phase of the second pulse.
    pub jump: f64,
}

impl LevineParams {
    pub fn total_time(&self) -> f64 {
        2.0 * self.area
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.detuning, self.area, self.jump]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self { detuning: x[0], area: x[1], jump: x[2] }
    }
}

/// Seeds tried in order by [`levine_calibrate`]. The first converges to a
/// short solution that fails the timing check; the second reaches the
/// 8.59 branch.
pub const LEVINE_SEEDS: [LevineParams; 2] = [
    LevineParams { detuning: 0.38, area: 2.7, jump: 3.9 },
    LevineParams { detuning: 0.38, area: 4.3, jump: 3.9 },
];

/// Expected gate time of the calibrated branch.
pub const LEVINE_TIME: f64 = 8.59;

/// Two global pulses at fixed detuning, the second with laser phase `jump`.
pub fn levine_sequence(params: &LevineParams) -> Sequence {
    let pulse = |phase: f64| {
        let mut p = PulseSpec::global(params.area, phase, 2);
        p.detuning = params.detuning;
        p
    };
    let mut seq = Sequence::new("Levine", 1, 2, vec![pulse(0.0), pulse(params.jump)], TargetGate::cphase(PI));
    seq.local_phase_fix = true;
    seq
}

/// Calibration residuals: both Bloch trajectories close (no amplitude left in
/// `|0r>` or `|W>`) and the qubit phases satisfy `phi_11 - 2 phi_01 = pi`.
pub fn levine_residuals(params: &LevineParams) -> Result<Vec<f64>> {
    let basis = BlockadedBasis::new(2)?;
    let u = propagate(&levine_sequence(params), &ideal_model(), false)?.u;
    let i01 = basis.config_index("01")?;
    let i11 = basis.config_index("11")?;
    let leak01 = u[(basis.config_index("0r")?, i01)];
    let w = basis.named_state("W")?;
    let leak11 = w.0.dotc(&u.column(i11));
    let u01 = u[(i01, i01)];
    let phase = u[(i11, i11)] * u01.conj() * u01.conj() + Complex64::new(1.0, 0.0);
    Ok(vec![leak01.re, leak01.im, leak11.re, leak11.im, phase.re, phase.im])
}

/// Levenberg-Marquardt solve of [`levine_residuals`] from a given seed.
pub fn levine_calibrate_from(seed: &LevineParams) -> Result<LevineParams> {
    let fit = least_squares(|x| levine_residuals(&LevineParams::from_slice(x)), &seed.to_vec(), 400)?;
    if fit.residual > 1e-10 {
        return Err(Error::NoConvergence { what: "Levine calibration".into(), residual: fit.residual });
    }
    let mut p = LevineParams::from_slice(&fit.x);
    p.jump = p.jump.rem_euclid(2.0 * PI);
    Ok(p)
}

/// Tries [`LEVINE_SEEDS`] in order and returns the first solution whose gate
/// time is within 0.05 of [`LEVINE_TIME`].
pub fn levine_calibrate() -> Result<LevineParams> {
    let mut best_residual = f64::INFINITY;
    let mut rejected = Vec::new();
    for seed in &LEVINE_SEEDS {
        match levine_calibrate_from(seed) {
            Ok(p) if (p.total_time() - LEVINE_TIME).abs() < 0.05 => return Ok(p),
            Ok(p) => rejected.push(p.total_time()),
            Err(Error::NoConvergence { residual, .. }) => best_residual = best_residual.min(residual),
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoConvergence {
        what: format!("Levine calibration (rejected gate times {rejected:?})"),
        residual: best_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Evaluator;

    #[test]
    fn jaksch_is_exact_cz() {
        let s = jaksch_sequence();
        assert!((s.nominal_duration() - 4.0 * PI).abs() < 1e-12);
        let r = Evaluator::new(&s).unwrap().report(&ideal_model()).unwrap();
        assert!(1.0 - r.f < 1e-12);
    }

    #[test]
    fn levine_calibration() {
        let p = levine_calibrate().unwrap();
        assert!((p.total_time() - 8.59).abs() < 0.01, "{p:?}");
        let s = levine_sequence(&p);
        let r = Evaluator::new(&s).unwrap().report(&ideal_model()).unwrap();
        assert!(1.0 - r.f < 1e-10);
        let again = levine_calibrate_from(&p).unwrap();
        assert!((again.detuning - p.detuning).abs() < 1e-10);
        assert!((again.area - p.area).abs() < 1e-10);
        assert!((again.jump - p.jump).abs() < 1e-10);
    }

    #[test]
    fn levine_needs_phase_fix() {
        let p = levine_calibrate().unwrap();
        let mut s = levine_sequence(&p);
        s.local_phase_fix = false;
        let r = Evaluator::new(&s).unwrap().report(&ideal_model()).unwrap();
        assert!(1.0 - r.f > 1e-3);
    }
}
