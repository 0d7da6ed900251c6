//! Dense reference simulator.
//!
//! Every gate is expanded to a full `2^n x 2^n` matrix by Kronecker products
//! of 2x2 blocks (qubit `n-1` leftmost, qubit 0 rightmost) and applied by
//! plain matrix-vector multiplication. Nothing here shares code with the
//! engine under test.

use num_complex::Complex64;
use qal::circuit::{Circuit, Instruction, Opcode};

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn pauli_x() -> Matrix {
    vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_y() -> Matrix {
    vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn pauli_z() -> Matrix {
    vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]
}

fn proj0() -> Matrix {
    vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]
}

fn proj1() -> Matrix {
    vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn scale(m: &Matrix, s: Complex64) -> Matrix {
    m.iter().map(|row| row.iter().map(|x| x * s).collect()).collect()
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn dagger(a: &Matrix) -> Matrix {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|i| (0..n).map(|j| a[j][i].conj()).collect()).collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac, br, bc) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// exp(-i theta/2 P) = cos(theta/2) I - i sin(theta/2) P
fn rotation(p: Matrix, theta: f64) -> Matrix {
    add(
        &scale(&identity(2), c((theta / 2.0).cos(), 0.0)),
        &scale(&p, c(0.0, -(theta / 2.0).sin())),
    )
}

fn phase(phi: f64) -> Matrix {
    vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), Complex64::from_polar(1.0, phi)],
    ]
}

pub fn gate_2x2(op: Opcode, angle: f32) -> Matrix {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    let theta = f64::from(angle);
    match op {
        Opcode::H => scale(&add(&pauli_x(), &pauli_z()), c(1.0 / 2f64.sqrt(), 0.0)),
        Opcode::X => pauli_x(),
        Opcode::Y => pauli_y(),
        Opcode::Z => pauli_z(),
        Opcode::S => phase(FRAC_PI_2),
        Opcode::Sdg => phase(-FRAC_PI_2),
        Opcode::T => phase(FRAC_PI_4),
        Opcode::Tdg => phase(-FRAC_PI_4),
        Opcode::Rx => rotation(pauli_x(), theta),
        Opcode::Ry => rotation(pauli_y(), theta),
        Opcode::Rz => rotation(pauli_z(), theta),
        other => panic!("{other} is not a single-qubit gate"),
    }
}

/// Tensor product of per-qubit factors; `factors[k]` acts on qubit k.
fn tensor(n: usize, factors: &[(usize, Matrix)]) -> Matrix {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        let f = factors
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| identity(2));
        out = kron(&out, &f);
    }
    out
}

/// Full-register matrix of one unitary instruction.
pub fn full_matrix(n: usize, ins: &Instruction) -> Matrix {
    let (a, b) = (usize::from(ins.q0), usize::from(ins.q1));
    match ins.opcode {
        Opcode::Cnot => add(&tensor(n, &[(a, proj0())]), &tensor(n, &[(a, proj1()), (b, pauli_x())])),
        Opcode::Cz => add(&tensor(n, &[(a, proj0())]), &tensor(n, &[(a, proj1()), (b, pauli_z())])),
        Opcode::Swap => {
            // SWAP = (II + XX + YY + ZZ) / 2
            let mut sum = tensor(n, &[]);
            for p in [pauli_x(), pauli_y(), pauli_z()] {
                sum = add(&sum, &tensor(n, &[(a, p.clone()), (b, p)]));
            }
            scale(&sum, c(0.5, 0.0))
        }
        Opcode::Nop | Opcode::Barrier => identity(1 << n),
        op => tensor(n, &[(a, gate_2x2(op, ins.param))]),
    }
}

pub fn matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Final state of a unitary circuit started from |0...0>.
pub fn simulate(c: &Circuit) -> Vec<Complex64> {
    let n = usize::from(c.num_qubits);
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    v[0] = Complex64::new(1.0, 0.0);
    for ins in &c.instructions {
        v = matvec(&full_matrix(n, ins), &v);
    }
    v
}

/// Product of all gate matrices (later gates on the left).
pub fn unitary(c: &Circuit) -> Matrix {
    let n = usize::from(c.num_qubits);
    let mut u = identity(1 << n);
    for ins in &c.instructions {
        u = matmul(&full_matrix(n, ins), &u);
    }
    u
}

pub fn max_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// |<a|b>|
pub fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

/// Overlap of two equal-size matrices up to global phase: |tr(A^dagger B)| / dim.
pub fn matrix_overlap(a: &Matrix, b: &Matrix) -> f64 {
    let dim = a.len();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            tr += a[j][i].conj() * b[j][i];
        }
    }
    tr.norm() / dim as f64
}
