//! Published expansion coefficients of the three robustness tables and their
//! recomputation.
//!
//! Table 1 is the intensity error, table 2 the symmetric detuning and table 3
//! the antisymmetric detuning. Each printed entry reads
//! `1 - c eps^k + O(eps^{k'})`; entries printed only as `1 - O(eps^k)` carry
//! no coefficient.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::ErrorKind;
use crate::error::{Error, Result};
use crate::metrics::{series_fit, Evaluator, Metric};
use crate::protocols::{ProtocolId, Sequence, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Printed {
    pub order: usize,
    pub coefficient: Option<f64>,
}

const fn c(order: usize, coefficient: f64) -> Printed {
    Printed { order, coefficient: Some(coefficient) }
}

const fn tail(order: usize) -> Printed {
    Printed { order, coefficient: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PaperRow {
    #[serde(serialize_with = "ser_id")]
    pub protocol: ProtocolId,
    pub variant: u8,
    pub duration: f64,
    pub f: Printed,
    pub p: Printed,
    pub c: Printed,
}

fn ser_id<S: serde::Serializer>(id: &ProtocolId, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(id.name())
}

impl PaperRow {
    pub fn printed(&self, metric: Metric) -> Printed {
        match metric {
            Metric::F => self.f,
            Metric::P => self.p,
            Metric::C => self.c,
        }
    }
}

const fn row(protocol: ProtocolId, variant: u8, duration: f64, f: Printed, p: Printed, c: Printed) -> PaperRow {
    PaperRow { protocol, variant, duration, f, p, c }
}

use ProtocolId::{Ia, IIa, IIb, Jaksch, Levine, I, II, III};

const TABLE_1: [PaperRow; 4] = [
    row(Jaksch, 1, 12.57, c(2, 4.935), c(2, 4.935), c(4, 4.870)),
    row(Levine, 1, 8.59, c(2, 2.963), c(2, 2.547), c(2, 0.416)),
    row(I, 1, 10.73, c(2, 1.878), c(2, 1.878), c(4, 0.329)),
    row(II, 1, 21.45, c(4, 0.329), c(6, 1.944), c(4, 0.329)),
];

const TABLE_2: [PaperRow; 12] = [
    row(Jaksch, 1, 12.57, c(2, 2.480), c(2, 1.0), c(2, 1.480)),
    row(Levine, 1, 8.59, c(2, 3.000), c(2, 0.077), c(2, 2.923)),
    row(I, 1, 10.73, c(2, 4.314), c(4, 3.124), c(2, 4.314)),
    row(II, 1, 21.45, c(2, 17.256), c(4, 6.249), c(2, 17.256)),
    row(Ia, 1, 10.73, c(2, 2.018), c(2, 2.018), c(4, 0.786)),
    row(Ia, 2, 10.73, c(2, 4.091), c(2, 4.091), c(4, 2.011)),
    row(IIa, 1, 21.45, c(4, 7.035), c(4, 6.249), c(4, 0.786)),
    row(IIa, 2, 21.45, c(4, 8.260), c(4, 6.249), c(4, 2.011)),
    row(IIb, 1, 21.45, c(4, 0.786), tail(6), c(4, 0.786)),
    row(IIb, 2, 21.45, c(4, 2.011), tail(6), c(4, 2.011)),
    row(III, 1, 42.90, c(4, 1.570), tail(6), c(4, 1.570)),
    row(III, 2, 42.90, c(4, 4.021), tail(6), c(4, 4.021)),
];

const TABLE_3: [PaperRow; 14] = [
    row(Jaksch, 1, 12.57, c(2, 6.428), c(2, 1.0), c(2, 5.428)),
    row(Levine, 1, 8.59, c(2, 11.772), c(2, 3.417), c(2, 8.355)),
    row(I, 1, 10.73, c(2, 17.637), c(2, 6.132), c(2, 11.505)),
    row(I, 2, 10.73, c(2, 19.313), c(2, 7.808), c(2, 11.505)),
    row(II, 1, 21.45, c(2, 58.284), c(2, 12.264), c(2, 46.020)),
    row(II, 2, 21.45, c(2, 61.636), c(2, 15.616), c(2, 46.020)),
    row(Ia, 1, 10.73, c(2, 2.0), c(2, 2.0), c(4, 0.8)),
    row(Ia, 2, 10.73, c(2, 3.591), c(2, 3.591), c(4, 2.580)),
    row(IIa, 1, 21.45, c(2, 12.264), c(2, 12.264), c(4, 171.462)),
    row(IIa, 2, 21.45, c(2, 15.616), c(2, 15.616), c(4, 272.779)),
    row(IIb, 1, 21.45, c(4, 0.8), tail(6), c(4, 0.8)),
    row(IIb, 2, 21.45, c(4, 2.580), tail(6), c(4, 2.580)),
    row(III, 1, 42.90, c(4, 676.0), c(4, 513.0), c(4, 163.0)),
    row(III, 2, 42.90, c(4, 1090.0), c(4, 837.0), c(4, 253.0)),
];

pub fn table_kind(which: u8) -> Result<ErrorKind> {
    match which {
        1 => Ok(ErrorKind::Intensity),
        2 => Ok(ErrorKind::SymDetuning),
        3 => Ok(ErrorKind::AntisymDetuning),
        _ => Err(Error::InvalidArgument(format!("table must be 1, 2 or 3, got {which}"))),
    }
}

pub fn paper_table(which: u8) -> Result<&'static [PaperRow]> {
    Ok(match which {
        1 => &TABLE_1,
        2 => &TABLE_2,
        3 => &TABLE_3,
        _ => return Err(Error::InvalidArgument(format!("table must be 1, 2 or 3, got {which}"))),
    })
}

/// Closed forms for Protocol I under intensity error, with `C_n = cos(n pi / sqrt 2)`:
/// `c2(F) = A pi^2 / 4` and `c4(C) = pi^4 B / 640`.
pub fn protocol_i_closed_forms() -> (f64, f64) {
    let cn = |n: f64| (n * PI / std::f64::consts::SQRT_2).cos();
    let a = cn(1.0).powi(2) + cn(1.0) + 1.0;
    let b = 13.0 + 4.0 * cn(1.0) + 8.0 * cn(2.0) - 4.0 * cn(3.0) + 3.0 * cn(4.0);
    (a * PI * PI / 4.0, PI.powi(4) * b / 640.0)
}

/// One recomputed entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub table: u8,
    pub protocol: String,
    pub variant: u8,
    pub model: String,
    pub metric: String,
    /// Leading even order of the exact expansion.
    pub order: usize,
    /// Least-squares coefficient at `order`.
    pub coefficient: f64,
    /// Taylor coefficient at `order`.
    pub exact: f64,
    pub paper_order: usize,
    pub paper_value: Option<f64>,
    pub abs_diff: Option<f64>,
    pub duration: f64,
    pub paper_duration: f64,
}

/// Threshold below which a Taylor coefficient counts as vanishing when
/// locating the leading order.
pub const ZERO_COEFFICIENT: f64 = 1e-6;

/// Highest order examined when locating the leading term.
pub const MAX_ORDER: usize = 8;

/// Lowest even order with a non-vanishing coefficient, and that coefficient.
pub fn leading_even(deficit: &[f64]) -> Option<(usize, f64)> {
    deficit.iter().enumerate().skip(2).step_by(2).find(|(_, c)| c.abs() > ZERO_COEFFICIENT).map(|(k, &c)| (k, c))
}

pub fn build_row_sequence(row: &PaperRow) -> Result<Sequence> {
    row.protocol.build(Variant::from_number(row.variant)?, PI)
}

/// Recomputes the three metric entries of one published row.
pub fn compute_row(table: u8, row: &PaperRow, seq: &Sequence) -> Result<Vec<TableRow>> {
    let kind = table_kind(table)?;
    let series = Evaluator::new(seq)?.series(kind, MAX_ORDER)?;
    let mut out = Vec::with_capacity(3);
    for metric in Metric::ALL {
        let deficit = series.deficit(metric);
        let printed = row.printed(metric);
        let (order, exact) = leading_even(&deficit).unwrap_or((MAX_ORDER, deficit[MAX_ORDER]));
        let fit = series_fit(seq, kind, metric, order)?;
        let coefficient = fit.coefficient(order);
        out.push(TableRow {
            table,
            protocol: row.protocol.name().to_string(),
            variant: row.variant,
            model: kind.name().to_string(),
            metric: metric.to_string(),
            order,
            coefficient,
            exact,
            paper_order: printed.order,
            paper_value: printed.coefficient,
            abs_diff: printed.coefficient.map(|p| (coefficient - p).abs()),
            duration: seq.nominal_duration(),
            paper_duration: row.duration,
        });
    }
    Ok(out)
}

/// All rows of one table, in publication order.
pub fn compute_table(which: u8) -> Result<Vec<TableRow>> {
    let mut out = Vec::new();
    for row in paper_table(which)? {
        out.extend(compute_row(which, row, &build_row_sequence(row)?)?);
    }
    Ok(out)
}
