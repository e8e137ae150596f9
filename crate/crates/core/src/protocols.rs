//! Catalog of pulse sequences and the JSON sequence format.
//!
//! Pulses are stored in application order: the first pulse in the list acts
//! first. Written as an operator product the list reads right to left, so
//! `[a, b, c]` is the product `U_c U_b U_a`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::angle::parse_angle;
use crate::dynamics::{propagate, DopplerSign, DriveSpec, ErrorKind, ErrorModel, PulseSpec};
use crate::error::{Error, Result};
use crate::hilbert::{BlockadedBasis, CMatrix, Config};

/// The error model with zero strength; any kind would do.
pub fn ideal_model() -> ErrorModel {
    ErrorModel::new(ErrorKind::Intensity, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    One,
    Two,
}

impl Variant {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Variant::One),
            2 => Ok(Variant::Two),
            _ => Err(Error::InvalidArgument(format!("variant must be 1 or 2, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Variant::One => 1,
            Variant::Two => 2,
        }
    }

    /// `(alpha_1, alpha_2)` of the S block.
    pub fn areas(self) -> (f64, f64) {
        match self {
            Variant::One => (PI / (2.0 * SQRT_2), PI),
            Variant::Two => (FRAC_PI_2, PI / SQRT_2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// Two-qubit `C_phi`.
    Cphase,
    /// Three-qubit `CC_phi`.
    Ccphase,
}

/// Diagonal target gate. `Cphase(phi)` applies `(e^{i phi})^{z1 z2 - z1 - z2}`,
/// which is `e^{-i phi}` on every computational state except `|00>`;
/// `Ccphase(phi)` applies `e^{-i phi}` to every state except `|000>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetGate {
    pub kind: GateKind,
    pub phase: f64,
}

impl TargetGate {
    pub fn cphase(phase: f64) -> Self {
        Self { kind: GateKind::Cphase, phase }
    }

    pub fn ccphase(phase: f64) -> Self {
        Self { kind: GateKind::Ccphase, phase }
    }

    pub fn n_atoms(&self) -> usize {
        match self.kind {
            GateKind::Cphase => 2,
            GateKind::Ccphase => 3,
        }
    }

    pub fn for_atoms(n_atoms: usize, phase: f64) -> Self {
        if n_atoms == 3 {
            Self::ccphase(phase)
        } else {
            Self::cphase(phase)
        }
    }

    pub fn amplitude(&self, config: &Config) -> Complex64 {
        if config.ones() == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -self.phase)
        }
    }

    /// The gate embedded in the blockaded basis, identity on Rydberg states.
    pub fn matrix(&self, basis: &BlockadedBasis) -> Result<CMatrix> {
        if basis.n_atoms() != self.n_atoms() {
            return Err(Error::DimensionMismatch { expected: self.n_atoms(), found: basis.n_atoms() });
        }
        let d = basis.dim();
        let mut m = CMatrix::identity(d, d);
        for i in basis.qubit_indices() {
            m[(i, i)] = self.amplitude(&basis.configs()[i]);
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub variant: u8,
    pub n_atoms: usize,
    pub pulses: Vec<PulseSpec>,
    pub target: TargetGate,
    /// Compare against the target only up to single-qubit Z phases.
    pub local_phase_fix: bool,
}

impl Sequence {
    pub fn new(name: impl Into<String>, variant: u8, n_atoms: usize, pulses: Vec<PulseSpec>, target: TargetGate) -> Self {
        Self { name: name.into(), variant, n_atoms, pulses, target, local_phase_fix: false }
    }

    /// Sum of pulse areas over nominal Rabi frequencies.
    pub fn nominal_duration(&self) -> f64 {
        self.pulses.iter().map(PulseSpec::duration).sum()
    }

    pub fn label(&self) -> String {
        format!("{} v{}", self.name, self.variant)
    }
}

fn block(pulses: &[PulseSpec], shift: f64) -> Vec<PulseSpec> {
    pulses.iter().cloned().map(|p| p.with_phase_shift(shift)).collect()
}

/// Marks a Doppler inversion before the first pulse and flips the sign of
/// every pulse in the block.
fn inverted(mut pulses: Vec<PulseSpec>) -> Vec<PulseSpec> {
    for p in &mut pulses {
        p.doppler = p.doppler.flipped();
    }
    if let Some(first) = pulses.first_mut() {
        first.inversion_before = true;
    }
    pulses
}

fn s_block(variant: Variant) -> Vec<PulseSpec> {
    let (a1, a2) = variant.areas();
    vec![PulseSpec::global(a1, 0.0, 2), PulseSpec::global(a2, FRAC_PI_2, 2), PulseSpec::global(a1, 0.0, 2)]
}

fn check_phase(phi: f64) -> Result<()> {
    if phi > 0.0 && phi <= 2.0 * PI {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gate phase {phi} outside (0, 2pi]")))
    }
}

/// `C_phi` from two S blocks, the second with laser phases shifted by `pi - phi`.
pub fn protocol_i(variant: Variant, phi: f64) -> Result<Sequence> {
    check_phase(phi)?;
    let s = s_block(variant);
    let mut pulses = s.clone();
    pulses.extend(block(&s, PI - phi));
    Ok(Sequence::new("I", variant.number(), 2, pulses, TargetGate::cphase(phi)))
}

/// Two `C_{phi/2}` gates with an inter-gate phase jump of `pi - phi`, which
/// cancels leakage to first order in the intensity error.
pub fn protocol_ii(variant: Variant, phi: f64) -> Result<Sequence> {
    check_phase(phi)?;
    let g = protocol_i(variant, phi / 2.0)?.pulses;
    let mut pulses = g.clone();
    pulses.extend(block(&g, PI - phi));
    Ok(Sequence::new("II", variant.number(), 2, pulses, TargetGate::cphase(phi)))
}

fn iia_with_jump(variant: Variant, phi: f64, jump: f64) -> Result<Sequence> {
    let g = protocol_i(variant, phi / 2.0)?.pulses;
    let mut pulses = g.clone();
    pulses.extend(inverted(block(&g, jump)));
    Ok(Sequence::new("II.a", variant.number(), 2, pulses, TargetGate::cphase(phi)))
}

fn leakage_derivative(seq: &Sequence, kind: ErrorKind) -> Result<f64> {
    let basis = BlockadedBasis::new(seq.n_atoms)?;
    let du = propagate(seq, &ErrorModel::new(kind, 0.0), true)?.du.expect("derivative requested");
    let leak = basis.rydberg_projector().0 * du * basis.qubit_projector().0;
    Ok(leak.norm())
}

/// Inter-gate phase jump of Protocol II.a: the jump minimizing the first-order
/// leakage `|Q dU/d eps P|` under symmetric detuning once the second gate's
/// Doppler sign is inverted. Grid scan, then golden-section refinement.
pub fn iia_jump(variant: Variant, phi: f64) -> Result<f64> {
    check_phase(phi)?;
    let cost = |jump: f64| iia_with_jump(variant, phi, jump).and_then(|s| leakage_derivative(&s, ErrorKind::SymDetuning));
    let seeds = [PI, (PI - phi).rem_euclid(2.0 * PI)];
    for &s in &seeds {
        if cost(s)? < 1e-10 {
            return Ok(s);
        }
    }
    let n = 72;
    let step = 2.0 * PI / n as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let x = k as f64 * step;
        let c = cost(x)?;
        if c < best.0 {
            best = (c, x);
        }
    }
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (cost(x1)?, cost(x2)?);
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2)?;
        }
    }
    let jump = (0.5 * (a + b)).rem_euclid(2.0 * PI);
    let residual = cost(jump)?;
    if residual > 1e-6 {
        return Err(Error::NoConvergence { what: "II.a phase jump".into(), residual });
    }
    Ok(jump)
}

/// Protocol II with the Doppler sign inverted for the second gate. For CZ the
/// inter-gate jump is `pi`; other phases use [`iia_jump`].
pub fn protocol_iia(variant: Variant, phi: f64) -> Result<Sequence> {
    check_phase(phi)?;
    let jump = if phi == PI { PI } else { iia_jump(variant, phi)? };
    iia_with_jump(variant, phi, jump)
}

/// Protocol I (CZ) with the Doppler sign reversed for the last three pulses.
pub fn protocol_ia(variant: Variant) -> Result<Sequence> {
    let mut seq = protocol_i(variant, PI)?;
    let tail = inverted(seq.pulses.split_off(3));
    seq.pulses.extend(tail);
    seq.name = "I.a".into();
    Ok(seq)
}

/// Two I.a-style `C_{pi/2}` gates without a phase jump. Doppler signs follow
/// `+++---+++---`, with an inversion before pulses 4, 7 and 10.
pub fn protocol_iib(variant: Variant) -> Result<Sequence> {
    let mut g = protocol_i(variant, FRAC_PI_2)?.pulses;
    let tail = inverted(g.split_off(3));
    g.extend(tail);
    let mut pulses = g.clone();
    let mut second = g;
    second[0].inversion_before = true;
    pulses.extend(second);
    Ok(Sequence::new("II.b", variant.number(), 2, pulses, TargetGate::cphase(PI)))
}

/// Two Protocol-II `C_{pi/2}` gates; the second runs with inverted Doppler
/// sign and laser phases offset by `-pi/2`, which cancels the first-order
/// `|11> -> |A>` amplitude of the antisymmetric detuning.
pub fn protocol_iii(variant: Variant) -> Result<Sequence> {
    let g = protocol_ii(variant, FRAC_PI_2)?.pulses;
    let mut pulses = g.clone();
    pulses.extend(inverted(block(&g, -FRAC_PI_2)));
    Ok(Sequence::new("III", variant.number(), 2, pulses, TargetGate::cphase(PI)))
}

/// Parameters of the palindromic block
/// `S3 = U_0(a1) U_{x2}(a2) U_{x3}(a3) U_{x2}(a2) U_0(a1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S3Params {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl S3Params {
    /// The four-digit values quoted for the CCZ gate.
    pub const PRINTED: S3Params = S3Params { alpha1: 1.088, alpha2: 1.955, alpha3: 5.373, xi2: 1.552, xi3: 1.593 };

    pub fn to_array(self) -> [f64; 5] {
        [self.alpha1, self.alpha2, self.alpha3, self.xi2, self.xi3]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        Self { alpha1: x[0], alpha2: x[1], alpha3: x[2], xi2: x[3], xi3: x[4] }
    }

    /// Duration of `S3` applied twice.
    pub fn ccz_duration(&self) -> f64 {
        2.0 * (2.0 * self.alpha1 + 2.0 * self.alpha2 + self.alpha3)
    }

    pub fn pulses(&self) -> Vec<PulseSpec> {
        let p = |a, x| PulseSpec::global(a, x, 3);
        vec![
            p(self.alpha1, 0.0),
            p(self.alpha2, self.xi2),
            p(self.alpha3, self.xi3),
            p(self.alpha2, self.xi2),
            p(self.alpha1, 0.0),
        ]
    }
}

/// `S3` twice, the second copy with laser phases shifted by `jump`; the result
/// is `CC_{pi - jump}`, so `jump = 0` gives CCZ.
pub fn ccz_sequence(params: &S3Params, jump: f64) -> Sequence {
    let s3 = params.pulses();
    let mut pulses = s3.clone();
    pulses.extend(block(&s3, jump));
    let name = if jump == 0.0 { "CCZ" } else { "CC" };
    Sequence::new(name, 1, 3, pulses, TargetGate::ccphase(PI - jump))
}

/// Leakage-robust CCZ: two `CC_{pi/2}` gates back to back, doubling the duration.
pub fn ccz_doubled(params: &S3Params) -> Sequence {
    let half = ccz_sequence(params, FRAC_PI_2).pulses;
    let mut pulses = half.clone();
    pulses.extend(half);
    Sequence::new("CCZ-doubled", 1, 3, pulses, TargetGate::ccphase(PI))
}

/// Named entries of the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolId {
    I,
    II,
    IIa,
    Ia,
    IIb,
    III,
    Jaksch,
    Levine,
    Ccz,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 9] = [
        ProtocolId::Jaksch,
        ProtocolId::Levine,
        ProtocolId::I,
        ProtocolId::II,
        ProtocolId::IIa,
        ProtocolId::Ia,
        ProtocolId::IIb,
        ProtocolId::III,
        ProtocolId::Ccz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::I => "I",
            ProtocolId::II => "II",
            ProtocolId::IIa => "II.a",
            ProtocolId::Ia => "I.a",
            ProtocolId::IIb => "II.b",
            ProtocolId::III => "III",
            ProtocolId::Jaksch => "Jaksch",
            ProtocolId::Levine => "Levine",
            ProtocolId::Ccz => "CCZ",
        }
    }

    /// Whether the protocol comes in the two S-block variants.
    pub fn has_variants(self) -> bool {
        !matches!(self, ProtocolId::Jaksch | ProtocolId::Levine | ProtocolId::Ccz)
    }

    /// Whether the gate phase can be chosen freely.
    pub fn has_phase(self) -> bool {
        matches!(self, ProtocolId::I | ProtocolId::II | ProtocolId::IIa | ProtocolId::Ccz)
    }

    /// Builds the sequence. `phi` is ignored by fixed-CZ protocols. The Levine
    /// gate is calibrated and the CCZ parameters polished on every call.
    pub fn build(self, variant: Variant, phi: f64) -> Result<Sequence> {
        match self {
            ProtocolId::I => protocol_i(variant, phi),
            ProtocolId::II => protocol_ii(variant, phi),
            ProtocolId::IIa => protocol_iia(variant, phi),
            ProtocolId::Ia => protocol_ia(variant),
            ProtocolId::IIb => protocol_iib(variant),
            ProtocolId::III => protocol_iii(variant),
            ProtocolId::Jaksch => Ok(crate::refgates::jaksch_sequence()),
            ProtocolId::Levine => Ok(crate::refgates::levine_sequence(&crate::refgates::levine_calibrate()?)),
            ProtocolId::Ccz => {
                check_phase(phi)?;
                let params = crate::optimize::polish(&S3Params::PRINTED)?.params;
                Ok(ccz_sequence(&params, PI - phi))
            }
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '.' && *c != '_').collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "i" | "1" => ProtocolId::I,
            "ii" | "2" => ProtocolId::II,
            "iia" => ProtocolId::IIa,
            "ia" => ProtocolId::Ia,
            "iib" => ProtocolId::IIb,
            "iii" | "3" => ProtocolId::III,
            "jaksch" => ProtocolId::Jaksch,
            "levine" => ProtocolId::Levine,
            "ccz" => ProtocolId::Ccz,
            _ => return Err(Error::InvalidArgument(format!("unknown protocol `{s}`"))),
        })
    }
}

// ---------------------------------------------------------------------------
// JSON sequence format

fn default_variant() -> u8 {
    1
}

fn default_rabi() -> f64 {
    1.0
}

fn default_doppler() -> i8 {
    1
}

fn is_default_rabi(x: &f64) -> bool {
    *x == 1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

fn de_angle<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match NumberOrText::deserialize(d)? {
        NumberOrText::Number(x) => Ok(x),
        NumberOrText::Text(s) => parse_angle(&s).map_err(de::Error::custom),
    }
}

fn de_area<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let a = de_angle(d)?;
    if !(a.is_finite() && a > 0.0) {
        return Err(de::Error::custom(format!("pulse area must be positive, got {a}")));
    }
    Ok(a)
}

fn de_doppler<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<i8, D::Error> {
    let v = match NumberOrText::deserialize(d)? {
        NumberOrText::Number(x) => x,
        NumberOrText::Text(s) => match s.trim() {
            "+" | "+1" | "1" => 1.0,
            "-" | "-1" => -1.0,
            other => return Err(de::Error::custom(format!("doppler flag must be +1 or -1, got `{other}`"))),
        },
    };
    match v {
        x if x == 1.0 => Ok(1),
        x if x == -1.0 => Ok(-1),
        x => Err(de::Error::custom(format!("doppler flag must be +1 or -1, got {x}"))),
    }
}

fn de_mask<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let s = String::deserialize(d)?;
    if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(de::Error::custom(format!("mask must be a bitstring, got `{s}`")));
    }
    Ok(Some(s))
}

fn ser_mask<S: Serializer>(m: &Option<String>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => s.serialize_str(m),
        None => s.serialize_none(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    #[serde(deserialize_with = "de_area")]
    area: f64,
    #[serde(default, deserialize_with = "de_angle")]
    phase: f64,
    #[serde(default, deserialize_with = "de_mask", serialize_with = "ser_mask", skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
    #[serde(default = "default_doppler", deserialize_with = "de_doppler")]
    doppler: i8,
    #[serde(default, skip_serializing_if = "is_false")]
    inversion_before: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    detuning: f64,
    #[serde(default = "default_rabi", skip_serializing_if = "is_default_rabi")]
    rabi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    name: String,
    #[serde(default = "default_variant")]
    variant: u8,
    n_atoms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<TargetGate>,
    #[serde(default, skip_serializing_if = "is_false")]
    local_phase_fix: bool,
    pulses: Vec<RawPulse>,
}

fn raw_from(seq: &Sequence) -> RawSequence {
    let pulses = seq
        .pulses
        .iter()
        .map(|p| {
            let mask = if p.drive.mask.iter().all(|&m| m) {
                None
            } else {
                Some(p.drive.mask.iter().map(|&m| if m { '1' } else { '0' }).collect())
            };
            RawPulse {
                area: p.area,
                phase: p.drive.phase,
                mask,
                doppler: p.doppler.value() as i8,
                inversion_before: p.inversion_before,
                detuning: p.detuning,
                rabi: p.drive.rabi,
            }
        })
        .collect();
    RawSequence {
        name: seq.name.clone(),
        variant: seq.variant,
        n_atoms: seq.n_atoms,
        target: Some(seq.target),
        local_phase_fix: seq.local_phase_fix,
        pulses,
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    let text = e.to_string();
    let message = match text.rfind(" at line ") {
        Some(pos) => text[..pos].to_string(),
        None => text,
    };
    Error::Parse { line: e.line(), column: e.column(), message }
}

/// Parses a JSON sequence document. Missing `mask` means every atom is
/// driven, missing `doppler` means `+1`, missing `target` means the phase-pi
/// gate for the given atom count.
pub fn parse_sequence(text: &str) -> Result<Sequence> {
    let raw: RawSequence = serde_json::from_str(text).map_err(parse_error)?;
    BlockadedBasis::new(raw.n_atoms)?;
    if !(1..=2).contains(&raw.variant) {
        return Err(Error::InvalidArgument(format!("variant must be 1 or 2, got {}", raw.variant)));
    }
    if raw.pulses.is_empty() {
        return Err(Error::InvalidArgument("sequence has no pulses".into()));
    }
    let target = raw.target.unwrap_or_else(|| TargetGate::for_atoms(raw.n_atoms, PI));
    if target.n_atoms() != raw.n_atoms {
        return Err(Error::InvalidArgument(format!("{:?} target needs {} atoms", target.kind, target.n_atoms())));
    }
    let mut pulses = Vec::with_capacity(raw.pulses.len());
    for (k, p) in raw.pulses.into_iter().enumerate() {
        let mask = match p.mask {
            None => vec![true; raw.n_atoms],
            Some(m) if m.len() == raw.n_atoms => m.chars().map(|c| c == '1').collect(),
            Some(m) => {
                return Err(Error::InvalidArgument(format!(
                    "pulse {}: mask `{m}` has {} entries for {} atoms",
                    k + 1,
                    m.len(),
                    raw.n_atoms
                )))
            }
        };
        if !(p.rabi.is_finite() && p.rabi > 0.0) {
            return Err(Error::InvalidArgument(format!("pulse {}: rabi must be positive", k + 1)));
        }
        pulses.push(PulseSpec {
            area: p.area,
            drive: DriveSpec { rabi: p.rabi, phase: p.phase, mask },
            detuning: p.detuning,
            doppler: if p.doppler < 0 { DopplerSign::Minus } else { DopplerSign::Plus },
            inversion_before: p.inversion_before,
        });
    }
    Ok(Sequence {
        name: raw.name,
        variant: raw.variant,
        n_atoms: raw.n_atoms,
        pulses,
        target,
        local_phase_fix: raw.local_phase_fix,
    })
}

/// Pretty-printed JSON; floats are written in shortest round-trip form so
/// `parse_sequence(serialize_sequence(s)) == s` exactly.
pub fn serialize_sequence(seq: &Sequence) -> String {
    serde_json::to_string_pretty(&raw_from(seq)).expect("sequence is always serializable")
}
