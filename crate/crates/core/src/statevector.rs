//! Dense statevector representation and the exact gate kernels for the six
//! translation-invariant Pauli-sum generators.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, validation, Result};
use crate::operator::{HamiltonianOperator, Pauli, PauliString};

const NORM_TOL: f64 = 1e-10;

/// Normalized pure state on `L` spins, little-endian in site index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    l: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// Computational basis state `|index⟩`.
    pub fn basis(l: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << l];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { l, amps }
    }

    /// `|00…0⟩`, every spin σᶻ = +1.
    pub fn all_up(l: usize) -> Self {
        Self::basis(l, 0)
    }

    /// Tensor product of the same single-site state on every site.
    pub fn product(l: usize, site: [Complex64; 2]) -> Result<Self> {
        let n2 = site[0].norm_sqr() + site[1].norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(validation("single-site state is not normalized"));
        }
        let amps = (0..1usize << l)
            .map(|k| (0..l).fold(Complex64::new(1.0, 0.0), |acc, i| acc * site[(k >> i) & 1]))
            .collect();
        Ok(Self { l, amps })
    }

    /// Wraps an amplitude vector, checking its length and norm.
    pub fn from_amplitudes(l: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << l {
            return Err(validation(format!(
                "amplitude vector has length {}, expected 2^{l}",
                amps.len()
            )));
        }
        let s = Self { l, amps };
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(validation(format!("state norm {n} differs from 1")));
        }
        Ok(s)
    }

    /// Wraps and rescales an arbitrary non-zero vector to unit norm.
    pub fn normalized(l: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << l {
            return Err(validation("amplitude vector length is not 2^L"));
        }
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(validation("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Ok(Self { l, amps })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Mutable access for in-place unitary kernels; callers must keep the norm.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.l != other.l {
            return Err(validation(format!(
                "dimension mismatch: L = {} vs L = {}",
                self.l, other.l
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Writes the debugging snapshot: u64 L header, then (re, im) f64 pairs,
    /// all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.l as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let l = u64::from_le_bytes(word) as usize;
        if l > 40 {
            return Err(validation(format!(
                "implausible L = {l} in snapshot header"
            )));
        }
        let mut amps = Vec::with_capacity(1 << l);
        for _ in 0..1usize << l {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            amps.push(Complex64::new(re, im));
        }
        Self::from_amplitudes(l, amps)
    }
}

/// The translation-invariant action generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliGenerator {
    SumX,
    SumY,
    SumZ,
    SumXx,
    SumYy,
    SumZz,
}

impl PauliGenerator {
    pub const ALL: [PauliGenerator; 6] = [
        PauliGenerator::SumX,
        PauliGenerator::SumY,
        PauliGenerator::SumZ,
        PauliGenerator::SumXx,
        PauliGenerator::SumYy,
        PauliGenerator::SumZz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PauliGenerator::SumX => "sum_x",
            PauliGenerator::SumY => "sum_y",
            PauliGenerator::SumZ => "sum_z",
            PauliGenerator::SumXx => "sum_xx",
            PauliGenerator::SumYy => "sum_yy",
            PauliGenerator::SumZz => "sum_zz",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|g| *g == self).unwrap()
    }

    fn pauli(self) -> Pauli {
        match self {
            PauliGenerator::SumX | PauliGenerator::SumXx => Pauli::X,
            PauliGenerator::SumY | PauliGenerator::SumYy => Pauli::Y,
            PauliGenerator::SumZ | PauliGenerator::SumZz => Pauli::Z,
        }
    }

    pub fn is_two_site(self) -> bool {
        matches!(
            self,
            PauliGenerator::SumXx | PauliGenerator::SumYy | PauliGenerator::SumZz
        )
    }

    /// Whether the generator commutes with `Σ σᶻσᶻ`.
    pub fn commutes_with_zz(self) -> bool {
        matches!(self, PauliGenerator::SumZ | PauliGenerator::SumZz)
    }

    /// Explicit term list (open chain).
    pub fn operator(self, l: usize) -> HamiltonianOperator {
        let p = self.pauli();
        let mut op = HamiltonianOperator::new(l);
        if self.is_two_site() {
            for i in 0..l.saturating_sub(1) {
                op.push(1.0, PauliString::from_sites(l, &[(i, p), (i + 1, p)]));
            }
        } else {
            for i in 0..l {
                op.push(1.0, PauliString::from_sites(l, &[(i, p)]));
            }
        }
        op
    }
}

impl std::str::FromStr for PauliGenerator {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        PauliGenerator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| validation(format!("unknown generator '{s}'")))
    }
}

/// Returns `exp(−i·duration·G)|state⟩`.
pub fn apply_generator_exponential(
    state: &QuantumState,
    gen: PauliGenerator,
    duration: f64,
) -> Result<QuantumState> {
    if !duration.is_finite() {
        return Err(validation(format!("non-finite gate duration {duration}")));
    }
    let mut out = state.clone();
    evolve_in_place(&mut out.amps, out.l, gen, duration);
    Ok(out)
}

/// In-place `exp(−i t G)` on a raw amplitude buffer of `2^l` entries.
///
/// All strings inside one generator commute, so the product of the per-site
/// (or per-bond) exponentials is exact in any order.
pub fn evolve_in_place(amps: &mut [Complex64], l: usize, gen: PauliGenerator, t: f64) {
    debug_assert_eq!(amps.len(), 1 << l);
    if t == 0.0 {
        return;
    }
    let (s, c) = t.sin_cos();
    let mi = Complex64::new(0.0, -s);
    match gen {
        PauliGenerator::SumZ => {
            for (k, a) in amps.iter_mut().enumerate() {
                let z = l as f64 - 2.0 * (k.count_ones() as f64);
                *a *= Complex64::from_polar(1.0, -t * z);
            }
        }
        PauliGenerator::SumZz => {
            if l < 2 {
                return;
            }
            let bonds = l - 1;
            let bond_mask = (1usize << bonds) - 1;
            for (k, a) in amps.iter_mut().enumerate() {
                let domain_walls = ((k ^ (k >> 1)) & bond_mask).count_ones() as f64;
                let zz = bonds as f64 - 2.0 * domain_walls;
                *a *= Complex64::from_polar(1.0, -t * zz);
            }
        }
        PauliGenerator::SumX => {
            for i in 0..l {
                let bit = 1usize << i;
                for k in 0..amps.len() {
                    if k & bit == 0 {
                        let (a0, a1) = (amps[k], amps[k | bit]);
                        amps[k] = c * a0 + mi * a1;
                        amps[k | bit] = c * a1 + mi * a0;
                    }
                }
            }
        }
        PauliGenerator::SumY => {
            // exp(−itY) = [[c, −s], [s, c]]
            for i in 0..l {
                let bit = 1usize << i;
                for k in 0..amps.len() {
                    if k & bit == 0 {
                        let (a0, a1) = (amps[k], amps[k | bit]);
                        amps[k] = c * a0 - s * a1;
                        amps[k | bit] = s * a0 + c * a1;
                    }
                }
            }
        }
        PauliGenerator::SumXx | PauliGenerator::SumYy => {
            let yy = gen == PauliGenerator::SumYy;
            for i in 0..l.saturating_sub(1) {
                let lo = 1usize << i;
                let pair = lo | (lo << 1);
                for k in 0..amps.len() {
                    if k & lo == 0 {
                        let j = k ^ pair;
                        // YY|b b'⟩ = −|b̄ b̄'⟩ when b = b', +|b̄ b̄'⟩ otherwise
                        let phase = if yy && ((k >> i) & 1) == ((k >> (i + 1)) & 1) {
                            -1.0
                        } else {
                            1.0
                        };
                        let (ak, aj) = (amps[k], amps[j]);
                        amps[k] = c * ak + phase * mi * aj;
                        amps[j] = c * aj + phase * mi * ak;
                    }
                }
            }
        }
    }
}

/// `⟨G⟩` for every generator, in [`PauliGenerator::ALL`] order, in one sweep
/// per site or bond.
pub fn generator_expectations(state: &QuantumState) -> [f64; 6] {
    let l = state.l;
    let amps = &state.amps;
    let bond_mask = if l >= 2 { (1usize << (l - 1)) - 1 } else { 0 };
    let (mut x, mut y, mut z, mut xx, mut yy, mut zz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        z += p * (l as f64 - 2.0 * k.count_ones() as f64);
        if l >= 2 {
            let walls = ((k ^ (k >> 1)) & bond_mask).count_ones() as f64;
            zz += p * ((l - 1) as f64 - 2.0 * walls);
        }
    }
    for i in 0..l {
        let bit = 1usize << i;
        for k in 0..amps.len() {
            if k & bit == 0 {
                // ⟨k|·|k+bit⟩ cross term c = conj(a_k) a_{k|bit}
                let c = amps[k].conj() * amps[k | bit];
                x += 2.0 * c.re;
                // Y|1⟩ = −i|0⟩
                y += 2.0 * c.im;
            }
        }
    }
    for i in 0..l.saturating_sub(1) {
        let lo = 1usize << i;
        let pair = lo | (lo << 1);
        for k in 0..amps.len() {
            if k & lo == 0 {
                let c = amps[k].conj() * amps[k ^ pair];
                xx += 2.0 * c.re;
                let equal = ((k >> i) & 1) == ((k >> (i + 1)) & 1);
                yy += if equal { -2.0 * c.re } else { 2.0 * c.re };
            }
        }
    }
    [x, y, z, xx, yy, zz]
}

/// `|⟨a|b⟩|`, insensitive to global phase.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner(b)?.norm())
}

/// Real expectation value `⟨ψ|O|ψ⟩`.
pub fn expectation(state: &QuantumState, op: &HamiltonianOperator) -> Result<f64> {
    op.validate()?;
    if op.l() != state.l {
        return Err(validation(format!(
            "operator acts on L = {}, state has L = {}",
            op.l(),
            state.l
        )));
    }
    let amps = &state.amps;
    let mut acc = Complex64::new(0.0, 0.0);
    for t in op.terms() {
        let m = t.string.masks();
        let mut term = Complex64::new(0.0, 0.0);
        for (k, &a) in amps.iter().enumerate() {
            term += amps[k ^ m.x_mask].conj() * m.phase(k) * a;
        }
        acc += t.coefficient * term;
    }
    if acc.im.abs() > 1e-10 * (1.0 + acc.re.abs()) {
        return Err(numerical(format!(
            "expectation has imaginary part {:e}; operator is not Hermitian",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Single-site Pauli measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

/// Outcome statistics of measuring every site in one Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDistribution {
    /// Probability per bitstring; bit value 0 is the +1 eigenvalue.
    pub bitstrings: Vec<f64>,
    /// Entry `j` is the probability that exactly `j` sites read +1, i.e.
    /// total magnetization `2j − L`.
    pub magnetization: Vec<f64>,
}

impl MeasurementDistribution {
    pub fn magnetization_value(&self, index: usize) -> i64 {
        2 * index as i64 - (self.magnetization.len() as i64 - 1)
    }
}

/// Rotates each site into the eigenbasis of `basis` and returns the
/// Born-rule distribution.
pub fn measurement_distribution(state: &QuantumState, basis: Basis) -> MeasurementDistribution {
    let l = state.l;
    let mut amps = state.amps.clone();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    if basis != Basis::Z {
        for i in 0..l {
            let bit = 1usize << i;
            for k in 0..amps.len() {
                if k & bit == 0 {
                    let (mut a0, mut a1) = (amps[k], amps[k | bit]);
                    if basis == Basis::Y {
                        // S† first
                        a1 *= Complex64::new(0.0, -1.0);
                    }
                    let (b0, b1) = (h * (a0 + a1), h * (a0 - a1));
                    a0 = b0;
                    a1 = b1;
                    amps[k] = a0;
                    amps[k | bit] = a1;
                }
            }
        }
    }
    let bitstrings: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let mut magnetization = vec![0.0; l + 1];
    for (k, p) in bitstrings.iter().enumerate() {
        magnetization[l - k.count_ones() as usize] += p;
    }
    MeasurementDistribution {
        bitstrings,
        magnetization,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::dense_expm_times;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(l: usize, rng: &mut impl Rng) -> QuantumState {
        let amps = (0..1usize << l)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        QuantumState::normalized(l, amps).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_duration_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(4, &mut rng);
        for g in PauliGenerator::ALL {
            let out = apply_generator_exponential(&s, g, 0.0).unwrap();
            assert_eq!(out.amplitudes(), s.amplitudes());
        }
    }

    #[test]
    fn sum_z_on_all_up_is_global_phase() {
        let l = 5;
        let s = QuantumState::all_up(l);
        let tau = 0.37;
        let out = apply_generator_exponential(&s, PauliGenerator::SumZ, tau).unwrap();
        let expect = Complex64::from_polar(1.0, -tau * l as f64);
        assert!((out.amplitudes()[0] - expect).norm() < 1e-14);
        assert!((fidelity(&s, &out).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sum_xx_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_state(3, &mut rng);
        let out = apply_generator_exponential(&s, PauliGenerator::SumXx, 0.37).unwrap();
        let op = PauliGenerator::SumXx.operator(3);
        let oracle = dense_expm_times(&op.to_dense(), 0.37, s.amplitudes());
        assert!(max_diff(out.amplitudes(), &oracle) < 1e-10);
    }

    #[test]
    fn every_generator_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in 1..=5 {
            for g in PauliGenerator::ALL {
                let op = g.operator(l).to_dense();
                for _ in 0..3 {
                    let s = random_state(l, &mut rng);
                    let t = rng.random_range(-2.0..2.0);
                    let out = apply_generator_exponential(&s, g, t).unwrap();
                    let oracle = dense_expm_times(&op, t, s.amplitudes());
                    assert!(max_diff(out.amplitudes(), &oracle) < 1e-10, "{g:?} L={l}");
                }
            }
        }
    }

    #[test]
    fn non_finite_duration_rejected() {
        let s = QuantumState::all_up(2);
        assert!(apply_generator_exponential(&s, PauliGenerator::SumX, f64::NAN).is_err());
        assert!(apply_generator_exponential(&s, PauliGenerator::SumX, f64::INFINITY).is_err());
    }

    #[test]
    fn fidelity_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(3, &mut rng);
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-14);
        let phased = QuantumState::from_amplitudes(
            3,
            s.amplitudes()
                .iter()
                .map(|a| a * Complex64::from_polar(1.0, 1.234))
                .collect(),
        )
        .unwrap();
        assert!((fidelity(&s, &phased).unwrap() - 1.0).abs() < 1e-14);
        let zero = QuantumState::basis(1, 0);
        let one = QuantumState::basis(1, 1);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!(fidelity(&zero, &QuantumState::all_up(2)).is_err());
    }

    #[test]
    fn expectation_examples() {
        let l = 4;
        let up = QuantumState::all_up(l);
        let z = PauliGenerator::SumZ.operator(l);
        assert!((expectation(&up, &z).unwrap() - l as f64).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(l, &mut rng);
        let mut id = HamiltonianOperator::new(l);
        id.push(1.0, PauliString::identity(l));
        assert!((expectation(&s, &id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distributions() {
        let l = 3;
        let up = QuantumState::all_up(l);
        let d = measurement_distribution(&up, Basis::Z);
        assert_eq!(d.bitstrings[0], 1.0);
        assert_eq!(d.magnetization[l], 1.0);
        assert_eq!(d.magnetization_value(l), 3);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            QuantumState::product(l, [Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap();
        let dz = measurement_distribution(&plus, Basis::Z);
        for p in &dz.bitstrings {
            assert!((p - 0.125).abs() < 1e-14);
        }
        let dx = measurement_distribution(&plus, Basis::X);
        assert!((dx.bitstrings[0] - 1.0).abs() < 1e-14);

        let plus_i =
            QuantumState::product(l, [Complex64::new(h, 0.0), Complex64::new(0.0, h)]).unwrap();
        let dy = measurement_distribution(&plus_i, Basis::Y);
        assert!((dy.bitstrings[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn binary_snapshot_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_state(3, &mut rng);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 8);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        let back = QuantumState::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn generator_names_roundtrip() {
        for g in PauliGenerator::ALL {
            assert_eq!(g.name().parse::<PauliGenerator>().unwrap(), g);
            assert_eq!(
                serde_json::to_string(&g).unwrap(),
                format!("\"{}\"", g.name())
            );
        }
    }

    #[test]
    fn generator_expectations_match_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for l in 1..=6 {
            let st = random_state(l, &mut rng);
            let fast = generator_expectations(&st);
            for g in PauliGenerator::ALL {
                let slow = expectation(&st, &g.operator(l)).unwrap();
                assert!((fast[g.index()] - slow).abs() < 1e-12, "{} L={l}", g.name());
            }
        }
    }
}
