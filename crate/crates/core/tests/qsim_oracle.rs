mod common;

use common::oracle;
use num_complex::Complex64;
use qal::circuit::Circuit;
use qal::qsim::{statevector_of, Statevector};

#[test]
fn three_qubit_thirty_gates_matches_dense_product() {
    let mut rng = common::rng(30);
    let mut c = Circuit::new(3, 0);
    for _ in 0..30 {
        c.push(common::random_unitary_instruction(&mut rng, 3));
    }
    let engine = statevector_of(&c).unwrap();
    let reference = oracle::simulate(&c);
    assert!(oracle::max_deviation(engine.amplitudes(), &reference) < 1e-10);
}

#[test]
fn random_circuits_match_oracle() {
    let mut rng = common::rng(0x5eed);
    for _ in 0..100 {
        let c = common::random_unitary_circuit(&mut rng, 6, 50);
        let engine = statevector_of(&c).unwrap();
        let reference = oracle::simulate(&c);
        let dev = oracle::max_deviation(engine.amplitudes(), &reference);
        assert!(dev < 1e-10, "deviation {dev:e} for {c:?}");
    }
}

#[test]
fn norm_preserved_after_every_gate() {
    let mut rng = common::rng(77);
    for _ in 0..50 {
        let c = common::random_unitary_circuit(&mut rng, 6, 50);
        let mut psi = Statevector::new(c.num_qubits).unwrap();
        for ins in &c.instructions {
            psi.apply(ins).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() <= 1e-9);
        }
    }
}

fn engine_unitary(c: &Circuit) -> oracle::Matrix {
    let dim = 1usize << c.num_qubits;
    let mut columns = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut basis = vec![Complex64::new(0.0, 0.0); dim];
        basis[j] = Complex64::new(1.0, 0.0);
        let mut psi = Statevector::from_amplitudes(basis).unwrap();
        for ins in &c.instructions {
            psi.apply(ins).unwrap();
        }
        columns.push(psi.into_amplitudes());
    }
    (0..dim).map(|i| (0..dim).map(|j| columns[j][i]).collect()).collect()
}

#[test]
fn assembled_matrix_is_unitary() {
    let mut rng = common::rng(4);
    for _ in 0..40 {
        let c = common::random_unitary_circuit(&mut rng, 4, 30);
        let u = engine_unitary(&c);
        let product = oracle::matmul(&oracle::dagger(&u), &u);
        let id = oracle::identity(u.len());
        for (row, id_row) in product.iter().zip(&id) {
            for (x, y) in row.iter().zip(id_row) {
                assert!((x - y).norm() <= 1e-9);
            }
        }
        // and it is the same operator the oracle builds
        let reference = oracle::unitary(&c);
        for (row, ref_row) in u.iter().zip(&reference) {
            assert!(oracle::max_deviation(row, ref_row) < 1e-10);
        }
    }
}
