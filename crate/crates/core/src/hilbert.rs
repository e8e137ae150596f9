//! Blockade-constrained state space for two or three atoms.
//!
//! Each atom has the levels `0`, `1` and `r`. The blockade is enforced
//! exactly: configurations with more than one Rydberg excitation are not part
//! of the basis at all. Configurations are ordered lexicographically with
//! `0 < 1 < r`, so `00, 01, 0r, 10, 11, 1r, r0, r1` for two atoms.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomLevel {
    Zero,
    One,
    Rydberg,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::Zero, AtomLevel::One, AtomLevel::Rydberg];

    pub fn symbol(self) -> char {
        match self {
            AtomLevel::Zero => '0',
            AtomLevel::One => '1',
            AtomLevel::Rydberg => 'r',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' => Some(AtomLevel::Zero),
            '1' => Some(AtomLevel::One),
            'r' | 'R' => Some(AtomLevel::Rydberg),
            _ => None,
        }
    }
}

/// One basis configuration, a level per atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config(pub Vec<AtomLevel>);

impl Config {
    pub fn parse(text: &str) -> Option<Self> {
        text.chars().map(AtomLevel::from_symbol).collect::<Option<Vec<_>>>().map(Config)
    }

    pub fn rydberg_count(&self) -> usize {
        self.0.iter().filter(|&&l| l == AtomLevel::Rydberg).count()
    }

    /// True when every atom is in a qubit level.
    pub fn is_computational(&self) -> bool {
        self.rydberg_count() == 0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&l| l == AtomLevel::One).count()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BlockadedBasis {
    n_atoms: usize,
    configs: Vec<Config>,
    index: HashMap<Config, usize>,
}

impl BlockadedBasis {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if !(2..=3).contains(&n_atoms) {
            return Err(Error::UnsupportedAtomCount(n_atoms));
        }
        let mut configs = vec![Vec::new()];
        for _ in 0..n_atoms {
            configs = configs
                .into_iter()
                .flat_map(|prefix| {
                    AtomLevel::ALL.iter().map(move |&l| {
                        let mut c = prefix.clone();
                        c.push(l);
                        c
                    })
                })
                .collect();
        }
        let configs: Vec<Config> = configs
            .into_iter()
            .map(Config)
            .filter(|c| c.rydberg_count() <= 1)
            .collect();
        let index = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Ok(Self { n_atoms, configs, index })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn index_of(&self, config: &Config) -> Option<usize> {
        self.index.get(config).copied()
    }

    /// Indices of the computational (qubit) configurations, in basis order.
    pub fn qubit_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.configs[i].is_computational()).collect()
    }

    /// Looks up a configuration written as a string of `0`, `1`, `r`.
    pub fn config_index(&self, text: &str) -> Result<usize> {
        Config::parse(text)
            .filter(|c| c.0.len() == self.n_atoms)
            .and_then(|c| self.index_of(&c))
            .ok_or_else(|| Error::UnknownState { name: text.to_string(), n_atoms: self.n_atoms })
    }

    pub fn basis_state(&self, index: usize) -> StateVector {
        let mut v = CVector::zeros(self.dim());
        v[index] = Complex64::new(1.0, 0.0);
        StateVector(v)
    }

    /// The symmetric singly-excited partner of a computational configuration:
    /// each atom in `1` is promoted to `r` in turn and the results are summed
    /// with equal weight. This is the state the global drive couples to.
    pub fn coupled_state(&self, config: &Config) -> Option<StateVector> {
        if !config.is_computational() || config.ones() == 0 {
            return None;
        }
        let mut v = CVector::zeros(self.dim());
        let amp = 1.0 / (config.ones() as f64).sqrt();
        for (atom, &level) in config.0.iter().enumerate() {
            if level == AtomLevel::One {
                let mut excited = config.clone();
                excited.0[atom] = AtomLevel::Rydberg;
                v[self.index_of(&excited)?] = Complex64::new(amp, 0.0);
            }
        }
        Some(StateVector(v))
    }

    /// Named states: computational strings (`"01"`, `"0r"`), `W` and `A` for
    /// two atoms, `W2` and `W3` for three atoms.
    pub fn named_state(&self, name: &str) -> Result<StateVector> {
        let unknown = || Error::UnknownState { name: name.to_string(), n_atoms: self.n_atoms };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match (self.n_atoms, name) {
            (2, "W") => self.coupled_state(&Config::parse("11").unwrap()).ok_or_else(unknown),
            (2, "A") => {
                let mut v = CVector::zeros(self.dim());
                v[self.config_index("r1")?] = Complex64::new(s, 0.0);
                v[self.config_index("1r")?] = Complex64::new(-s, 0.0);
                Ok(StateVector(v))
            }
            (3, "W2") => self.coupled_state(&Config::parse("011").unwrap()).ok_or_else(unknown),
            (3, "W3") => self.coupled_state(&Config::parse("111").unwrap()).ok_or_else(unknown),
            _ => self.config_index(name).map(|i| self.basis_state(i)).map_err(|_| unknown()),
        }
    }

    /// Projector onto the computational subspace.
    pub fn qubit_projector(&self) -> Projector {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in self.qubit_indices() {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        Projector(m)
    }

    /// Projector onto the Rydberg states reachable from the qubit subspace:
    /// the span of the coupled partners of every non-trivial computational
    /// state. For two atoms this is `span{|r0>, |0r>, |W>}`.
    pub fn rydberg_projector(&self) -> Projector {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in self.qubit_indices() {
            if let Some(up) = self.coupled_state(&self.configs[i]) {
                m += &up.0 * up.0.adjoint();
            }
        }
        Projector(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub CVector);

impl StateVector {
    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector(pub CMatrix);

impl Projector {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        StateVector(&self.0 * &v.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dimensions() {
        assert_eq!(BlockadedBasis::new(2).unwrap().dim(), 8);
        assert_eq!(BlockadedBasis::new(3).unwrap().dim(), 20);
        assert!(matches!(BlockadedBasis::new(4), Err(Error::UnsupportedAtomCount(4))));
        assert!(BlockadedBasis::new(1).is_err());
    }

    #[test]
    fn canonical_order_and_blockade() {
        let b = BlockadedBasis::new(2).unwrap();
        let names: Vec<String> = b.configs().iter().map(|c| c.to_string()).collect();
        assert_eq!(names, ["00", "01", "0r", "10", "11", "1r", "r0", "r1"]);
        for n in [2, 3] {
            let b = BlockadedBasis::new(n).unwrap();
            assert!(b.configs().windows(2).all(|w| w[0] < w[1]));
            for (i, c) in b.configs().iter().enumerate() {
                assert!(c.rydberg_count() <= 1);
                assert_eq!(b.index_of(c), Some(i));
            }
        }
    }

    #[test]
    fn named_states() {
        let b = BlockadedBasis::new(2).unwrap();
        let w = b.named_state("W").unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w.0[b.config_index("1r").unwrap()].re - s).abs() < 1e-15);
        assert!((w.0[b.config_index("r1").unwrap()].re - s).abs() < 1e-15);
        let a = b.named_state("A").unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-15);
        assert_eq!(w.inner(&a), Complex64::new(0.0, 0.0));
        let zz = b.named_state("00").unwrap();
        assert_eq!(zz.0[0], Complex64::new(1.0, 0.0));
        assert!(b.named_state("W3").is_err());
        assert!(b.named_state("xyz").is_err());

        let b3 = BlockadedBasis::new(3).unwrap();
        let w3 = b3.named_state("W3").unwrap();
        for c in ["11r", "1r1", "r11"] {
            let amp = w3.0[b3.config_index(c).unwrap()];
            assert!((amp.re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        assert!((b3.named_state("W2").unwrap().norm() - 1.0).abs() < 1e-15);
        assert!(b3.named_state("A").is_err());
    }

    #[test]
    fn projectors() {
        for n in [2, 3] {
            let b = BlockadedBasis::new(n).unwrap();
            let p = b.qubit_projector();
            let q = b.rydberg_projector();
            assert_eq!(p.trace().round() as usize, 1 << n);
            assert!(max_abs(&(&p.0 * &p.0 - &p.0)) < 1e-14);
            assert!(max_abs(&(&q.0 * &q.0 - &q.0)) < 1e-14);
            assert!(max_abs(&(&p.0 * &q.0)) < 1e-14);
        }
        let b = BlockadedBasis::new(2).unwrap();
        assert!((b.rydberg_projector().trace() - 3.0).abs() < 1e-14);
        let w = b.named_state("W").unwrap();
        assert!(b.qubit_projector().apply(&w).norm() < 1e-15);
        let a = b.named_state("A").unwrap();
        assert!(b.rydberg_projector().apply(&a).norm() < 1e-15);
    }
}
