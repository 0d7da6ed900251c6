//! Statevector engine.
//!
//! Amplitude index bit `k` is qubit `k` (little-endian), so for two qubits the
//! basis order is `|q1 q0> = 00, 01, 10, 11` and the state "q0 = 1, q1 = 0"
//! lives at index 1.
//!
//! Sampling re-prepares the state for every shot. The unitary prefix (every
//! instruction before the first measurement or reset) is evaluated once and
//! cloned per shot. Randomness comes from a ChaCha8 stream seeded with the
//! caller's 64-bit seed; each MEASURE or RESET consumes exactly one `f64`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction, Opcode, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsimError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCountOutOfRange(u16),
    #[error("opcode {0} is not a unitary gate")]
    NonUnitaryOpcode(Opcode),
    #[error("circuit contains measurement or reset")]
    NonUnitaryCircuit,
    #[error("qubit q{0} out of range")]
    QubitOutOfRange(u8),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error(transparent)]
    InvalidCircuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: u16,
    amps: Vec<Complex64>,
}

type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2x2 unitary of a single-qubit opcode. `None` for everything else.
pub fn single_qubit_matrix(opcode: Opcode, angle: f32) -> Option<Matrix2> {
    let theta = f64::from(angle);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let m = match opcode {
        Opcode::H => [[h, h], [h, -h]],
        Opcode::X => [[ZERO, ONE], [ONE, ZERO]],
        Opcode::Y => [[ZERO, -I], [I, ZERO]],
        Opcode::Z => [[ONE, ZERO], [ZERO, -ONE]],
        Opcode::S => [[ONE, ZERO], [ZERO, I]],
        Opcode::Sdg => [[ONE, ZERO], [ZERO, -I]],
        Opcode::T => [
            [ONE, ZERO],
            [ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
        ],
        Opcode::Tdg => [
            [ONE, ZERO],
            [ZERO, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)],
        ],
        Opcode::Rx => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Opcode::Ry => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Opcode::Rz => [
            [Complex64::from_polar(1.0, -theta / 2.0), ZERO],
            [ZERO, Complex64::from_polar(1.0, theta / 2.0)],
        ],
        _ => return None,
    };
    Some(m)
}

impl Statevector {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: u16) -> Result<Self, QsimError> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(QsimError::QubitCountOutOfRange(n));
        }
        let mut amps = vec![ZERO; 1usize << n];
        amps[0] = ONE;
        Ok(Self { num_qubits: n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(QsimError::QubitCountOutOfRange(0));
        }
        let n = len.trailing_zeros() as u16;
        if n > MAX_QUBITS {
            return Err(QsimError::QubitCountOutOfRange(n));
        }
        Ok(Self { num_qubits: n, amps })
    }

    pub fn num_qubits(&self) -> u16 {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|<self|other>|`, which is 1 for states equal up to global phase.
    pub fn overlap(&self, other: &Statevector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    fn check_qubit(&self, q: u8) -> Result<usize, QsimError> {
        if u16::from(q) < self.num_qubits {
            Ok(usize::from(q))
        } else {
            Err(QsimError::QubitOutOfRange(q))
        }
    }

    /// Applies one unitary instruction in place.
    pub fn apply(&mut self, ins: &Instruction) -> Result<(), QsimError> {
        if !ins.opcode.is_unitary() {
            return Err(QsimError::NonUnitaryOpcode(ins.opcode));
        }
        match ins.opcode {
            Opcode::Cnot => {
                let (c, t) = (self.check_qubit(ins.q0)?, self.check_qubit(ins.q1)?);
                if c == t {
                    return Err(QsimError::QubitOutOfRange(ins.q1));
                }
                let (cm, tm) = (1usize << c, 1usize << t);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            Opcode::Cz => {
                let (a, b) = (self.check_qubit(ins.q0)?, self.check_qubit(ins.q1)?);
                if a == b {
                    return Err(QsimError::QubitOutOfRange(ins.q1));
                }
                let mask = (1usize << a) | (1usize << b);
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Opcode::Swap => {
                let (a, b) = (self.check_qubit(ins.q0)?, self.check_qubit(ins.q1)?);
                if a == b {
                    return Err(QsimError::QubitOutOfRange(ins.q1));
                }
                let (am, bm) = (1usize << a, 1usize << b);
                for i in 0..self.amps.len() {
                    if i & am != 0 && i & bm == 0 {
                        self.amps.swap(i, i ^ am ^ bm);
                    }
                }
            }
            op => {
                let q = self.check_qubit(ins.q0)?;
                let m = single_qubit_matrix(op, ins.param).expect("single-qubit unitary");
                self.apply_matrix(q, &m);
            }
        }
        Ok(())
    }

    fn apply_matrix(&mut self, q: usize, m: &Matrix2) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn probability_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projective Z measurement driven by the supplied uniform draw in [0, 1).
    pub fn measure_with(&mut self, q: u8, draw: f64) -> Result<bool, QsimError> {
        let q = self.check_qubit(q)?;
        let p1 = self.probability_one(q);
        let outcome = draw < p1;
        let keep = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep.sqrt();
        let bit = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *amp *= scale;
            } else {
                *amp = ZERO;
            }
        }
        Ok(outcome)
    }

    fn reset_with(&mut self, q: u8, draw: f64) -> Result<(), QsimError> {
        if self.measure_with(q, draw)? {
            let m = single_qubit_matrix(Opcode::X, 0.0).unwrap();
            self.apply_matrix(usize::from(q), &m);
        }
        Ok(())
    }
}

/// Shot counts keyed by classical register value (bit `k` is cbit `k`).
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Histogram {
    pub num_cbits: u16,
    pub counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn new(num_cbits: u16) -> Self {
        Self {
            num_cbits,
            counts: BTreeMap::new(),
        }
    }

    /// Every shot reads all-zero bits.
    pub fn all_zero(num_cbits: u16, shots: u64) -> Self {
        let mut h = Self::new(num_cbits);
        h.counts.insert(0, shots);
        h
    }

    pub fn get(&self, key: u64) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `(bitstring, count)` rows with cbit 0 rightmost.
    pub fn rows(&self) -> Vec<(String, u64)> {
        let width = usize::from(self.num_cbits);
        self.counts
            .iter()
            .map(|(&k, &n)| {
                let s = if width == 0 {
                    String::new()
                } else {
                    format!("{k:0width$b}")
                };
                (s, n)
            })
            .collect()
    }
}

pub fn new_state(n: u16) -> Result<Statevector, QsimError> {
    Statevector::new(n)
}

pub fn apply_gate(mut psi: Statevector, ins: &Instruction) -> Result<Statevector, QsimError> {
    psi.apply(ins)?;
    Ok(psi)
}

/// Exact final state of a circuit with no measurements or resets.
pub fn statevector_of(c: &Circuit) -> Result<Statevector, QsimError> {
    c.validate()?;
    if !c.is_unitary() {
        return Err(QsimError::NonUnitaryCircuit);
    }
    let mut psi = Statevector::new(c.num_qubits)?;
    for ins in c.instructions.iter().filter(|i| i.opcode.is_unitary()) {
        psi.apply(ins)?;
    }
    Ok(psi)
}

/// Samples `shots` executions of `c`. Deterministic in `(c, shots, seed)`.
pub fn run_circuit(c: &Circuit, shots: u64, seed: u64) -> Result<Histogram, QsimError> {
    c.validate()?;
    if shots == 0 {
        return Err(QsimError::ZeroShots);
    }
    let split = c
        .instructions
        .iter()
        .position(|i| matches!(i.opcode, Opcode::Measure | Opcode::Reset))
        .unwrap_or(c.instructions.len());
    let (prefix, rest) = c.instructions.split_at(split);

    let mut prepared = Statevector::new(c.num_qubits)?;
    for ins in prefix.iter().filter(|i| i.opcode.is_unitary()) {
        prepared.apply(ins)?;
    }

    let mut hist = Histogram::new(c.num_cbits);
    if rest.is_empty() {
        hist.counts.insert(0, shots);
        return Ok(hist);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let mut psi = prepared.clone();
        let mut bits = 0u64;
        for ins in rest {
            match ins.opcode {
                Opcode::Measure => {
                    let cbit = 1u64 << ins.cbit;
                    if psi.measure_with(ins.q0, rng.random::<f64>())? {
                        bits |= cbit;
                    } else {
                        bits &= !cbit;
                    }
                }
                Opcode::Reset => psi.reset_with(ins.q0, rng.random::<f64>())?,
                Opcode::Nop | Opcode::Barrier => {}
                _ => psi.apply(ins)?,
            }
        }
        *hist.counts.entry(bits).or_insert(0) += 1;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn fresh_states() {
        assert_eq!(new_state(1).unwrap().amplitudes(), &[ONE, ZERO]);
        assert_eq!(new_state(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(new_state(17), Err(QsimError::QubitCountOutOfRange(17)));
        assert_eq!(new_state(0), Err(QsimError::QubitCountOutOfRange(0)));
    }

    #[test]
    fn hadamard_on_zero() {
        let psi = apply_gate(new_state(1).unwrap(), &Instruction::single(Opcode::H, 0)).unwrap();
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(psi.amplitudes()[0], h) && close(psi.amplitudes()[1], h));
    }

    #[test]
    fn cnot_little_endian() {
        // |q1 q0> = |01>: q0 = 1 is index 1; CNOT(q0 -> q1) flips q1, giving index 3.
        let mut psi = new_state(2).unwrap();
        psi.apply(&Instruction::single(Opcode::X, 0)).unwrap();
        psi.apply(&Instruction::pair(Opcode::Cnot, 0, 1)).unwrap();
        assert!(close(psi.amplitudes()[3], ONE));
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unitary_rejected() {
        let psi = new_state(1).unwrap();
        assert_eq!(
            apply_gate(psi.clone(), &Instruction::measure(0, 0)),
            Err(QsimError::NonUnitaryOpcode(Opcode::Measure))
        );
        assert_eq!(
            apply_gate(psi, &Instruction::single(Opcode::X, 3)),
            Err(QsimError::QubitOutOfRange(3))
        );
    }

    #[test]
    fn statevector_of_examples() {
        let empty = statevector_of(&Circuit::new(2, 0)).unwrap();
        assert_eq!(empty.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);

        let mut bell = Circuit::new(2, 0);
        bell.push(Instruction::single(Opcode::H, 0));
        bell.push(Instruction::pair(Opcode::Cnot, 0, 1));
        let psi = statevector_of(&bell).unwrap();
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(psi.amplitudes()[0], h) && close(psi.amplitudes()[3], h));
        assert!(close(psi.amplitudes()[1], ZERO) && close(psi.amplitudes()[2], ZERO));

        let theta = 1.234_f32;
        let mut inv = Circuit::new(1, 0);
        inv.push(Instruction::rotation(Opcode::Rz, 0, theta));
        inv.push(Instruction::rotation(Opcode::Rz, 0, -theta));
        let psi = statevector_of(&inv).unwrap();
        assert!(psi.overlap(&new_state(1).unwrap()) >= 1.0 - 1e-12);

        assert_eq!(statevector_of(&Circuit::bell()), Err(QsimError::NonUnitaryCircuit));
    }

    #[test]
    fn plus_state_sampling_band() {
        let mut c = Circuit::new(1, 1);
        c.push(Instruction::single(Opcode::H, 0));
        c.push(Instruction::measure(0, 0));
        for seed in [0, 1, 42, u64::MAX] {
            let h = run_circuit(&c, 10_000, seed).unwrap();
            assert_eq!(h.total(), 10_000);
            assert!((4700..=5300).contains(&h.get(0)), "seed {seed}: {:?}", h);
            assert_eq!(h.get(0) + h.get(1), 10_000);
        }
    }

    #[test]
    fn bell_has_even_parity_only() {
        let h = run_circuit(&Circuit::bell(), 10_000, 7).unwrap();
        assert_eq!(h.get(0b01), 0);
        assert_eq!(h.get(0b10), 0);
        assert_eq!(h.get(0b00) + h.get(0b11), 10_000);
    }

    #[test]
    fn deterministic_outcome() {
        let mut c = Circuit::new(1, 1);
        c.push(Instruction::single(Opcode::X, 0));
        c.push(Instruction::measure(0, 0));
        let h = run_circuit(&c, 7, 3).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(1, 7)]));
    }

    #[test]
    fn seed_determinism() {
        let mut c = Circuit::new(3, 3);
        for q in 0..3 {
            c.push(Instruction::rotation(Opcode::Ry, q, 0.3 + f32::from(q)));
        }
        for q in 0..3 {
            c.push(Instruction::measure(q, q));
        }
        assert_eq!(run_circuit(&c, 500, 9).unwrap(), run_circuit(&c, 500, 9).unwrap());
        assert_ne!(run_circuit(&c, 500, 9).unwrap(), run_circuit(&c, 500, 10).unwrap());
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut c = Circuit::new(1, 1);
        c.push(Instruction::single(Opcode::H, 0));
        c.push(Instruction::single(Opcode::Reset, 0));
        c.push(Instruction::measure(0, 0));
        let h = run_circuit(&c, 200, 1).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(0, 200)]));
    }

    #[test]
    fn mid_circuit_measurement_overwrites_bit() {
        // measure |1> into c0, flip back, measure again into c0
        let mut c = Circuit::new(1, 1);
        c.push(Instruction::single(Opcode::X, 0));
        c.push(Instruction::measure(0, 0));
        c.push(Instruction::single(Opcode::X, 0));
        c.push(Instruction::measure(0, 0));
        assert_eq!(run_circuit(&c, 10, 0).unwrap().counts, BTreeMap::from([(0, 10)]));
    }

    #[test]
    fn no_measurement_reads_zero() {
        let mut c = Circuit::new(2, 2);
        c.push(Instruction::single(Opcode::H, 1));
        assert_eq!(run_circuit(&c, 5, 0).unwrap().counts, BTreeMap::from([(0, 5)]));
        assert_eq!(run_circuit(&c, 0, 0), Err(QsimError::ZeroShots));
    }

    #[test]
    fn histogram_rows_render_bitstrings() {
        let h = Histogram {
            num_cbits: 2,
            counts: BTreeMap::from([(0, 3), (3, 4)]),
        };
        assert_eq!(h.rows(), vec![("00".to_string(), 3), ("11".to_string(), 4)]);
    }
}
