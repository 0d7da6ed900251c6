mod common;

use common::oracle::{self, Matrix};
use num_complex::Complex64;
use qal::circuit::{Circuit, Instruction, Opcode};
use qal::host::{native_gate_set, DeviceInfo};
use qal::qsim::statevector_of;
use qal::transpile::{decompose, route, transpile, CouplingMap, TranspileCache, TranspiledCircuit};

/// Physical basis index of logical basis index `i` under `layout`.
fn permute_index(i: usize, layout: &[u8]) -> usize {
    layout
        .iter()
        .enumerate()
        .filter(|(l, _)| i >> l & 1 == 1)
        .map(|(_, &p)| 1usize << p)
        .sum()
}

/// Pads `c` with idle qubits up to `width`.
fn widen(c: &Circuit, width: u16) -> Circuit {
    Circuit::with_instructions(width, c.num_cbits, c.instructions.clone())
}

fn permuted_unitary(u: &Matrix, layout: &[u8]) -> Matrix {
    let dim = u.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in u.iter().enumerate() {
        out[permute_index(i, layout)].clone_from(row);
    }
    out
}

fn check_equivalent(original: &Circuit, t: &TranspiledCircuit) {
    let width = t.circuit.num_qubits;
    let expected = permuted_unitary(&oracle::unitary(&widen(original, width)), &t.layout_out);
    let actual = oracle::unitary(&t.circuit);
    let ov = oracle::matrix_overlap(&expected, &actual);
    assert!(ov >= 1.0 - 1e-6, "unitary overlap {ov} for {original:?} -> {t:?}");

    // statevector form: original == P^-1 * transpiled
    let orig = statevector_of(&widen(original, width)).unwrap();
    let trans = statevector_of(&t.circuit).unwrap();
    let mut pulled_back = vec![Complex64::new(0.0, 0.0); trans.amplitudes().len()];
    for (i, slot) in pulled_back.iter_mut().enumerate() {
        *slot = trans.amplitudes()[permute_index(i, &t.layout_out)];
    }
    assert!(oracle::overlap(orig.amplitudes(), &pulled_back) >= 1.0 - 1e-6);
}

fn assert_legal(t: &TranspiledCircuit, map: &CouplingMap) {
    let native = native_gate_set();
    for ins in &t.circuit.instructions {
        assert!(
            native.contains(&ins.opcode) || matches!(ins.opcode, Opcode::Measure | Opcode::Reset | Opcode::Barrier),
            "{:?} is not native",
            ins.opcode
        );
        if ins.opcode.is_two_qubit() {
            assert!(map.is_adjacent(ins.q0, ins.q1), "({},{}) off-coupling", ins.q0, ins.q1);
        }
    }
}

#[test]
fn hadamard_decomposition_matches_up_to_phase() {
    let c = Circuit::with_instructions(1, 0, vec![Instruction::single(Opcode::H, 0)]);
    let lowered = decompose(&c, &native_gate_set()).unwrap();
    assert_eq!(lowered.len(), 3);
    let ov = oracle::matrix_overlap(&oracle::unitary(&c), &oracle::unitary(&lowered));
    assert!(ov >= 1.0 - 1e-6);
}

#[test]
fn every_rule_preserves_the_unitary() {
    let cases = [
        Instruction::single(Opcode::H, 0),
        Instruction::single(Opcode::X, 0),
        Instruction::single(Opcode::Y, 1),
        Instruction::single(Opcode::Z, 0),
        Instruction::single(Opcode::S, 1),
        Instruction::single(Opcode::Sdg, 0),
        Instruction::single(Opcode::T, 0),
        Instruction::single(Opcode::Tdg, 1),
        Instruction::rotation(Opcode::Ry, 0, 0.731),
        Instruction::rotation(Opcode::Ry, 1, -2.9),
        Instruction::pair(Opcode::Cz, 0, 1),
        Instruction::pair(Opcode::Cz, 1, 0),
        Instruction::pair(Opcode::Swap, 1, 0),
    ];
    for ins in cases {
        let c = Circuit::with_instructions(2, 0, vec![ins]);
        let lowered = decompose(&c, &native_gate_set()).unwrap();
        let ov = oracle::matrix_overlap(&oracle::unitary(&c), &oracle::unitary(&lowered));
        assert!(ov >= 1.0 - 1e-6, "{ins:?}: overlap {ov}");
    }
}

#[test]
fn swap_decomposition_is_exact() {
    let c = Circuit::with_instructions(2, 0, vec![Instruction::pair(Opcode::Swap, 0, 1)]);
    let lowered = decompose(&c, &native_gate_set()).unwrap();
    let (a, b) = (oracle::unitary(&c), oracle::unitary(&lowered));
    for (ra, rb) in a.iter().zip(&b) {
        assert!(oracle::max_deviation(ra, rb) < 1e-15);
    }
}

#[test]
fn line_routing_example_is_equivalent_under_permutation() {
    let c = Circuit::with_instructions(3, 0, vec![Instruction::pair(Opcode::Cnot, 0, 2)]);
    let map = CouplingMap::line(3).unwrap();
    let t = route(&c, &map).unwrap();
    assert_eq!(t.layout_out, vec![1, 0, 2]);
    check_equivalent(&c, &t);
    assert_legal(&t, &map);
}

#[test]
fn random_circuits_preserve_semantics_on_line_and_ring() {
    let mut rng = common::rng(2024);
    for i in 0..100 {
        let c = common::random_unitary_circuit(&mut rng, 4, 25);
        let n = if i % 3 == 0 { 4 } else { c.num_qubits.max(2) };
        let map = if i % 2 == 0 {
            CouplingMap::line(n).unwrap()
        } else {
            CouplingMap::ring(n).unwrap()
        };
        let info = DeviceInfo::for_coupling(map.clone());
        let t = transpile(&c, &info, &TranspileCache::new(4)).unwrap();
        assert_legal(&t, &map);
        check_equivalent(&c, &t);
    }
}

#[test]
fn transpile_is_idempotent_and_deterministic() {
    let mut rng = common::rng(99);
    for _ in 0..40 {
        let c = common::random_unitary_circuit(&mut rng, 4, 25);
        let info = DeviceInfo::for_coupling(CouplingMap::line(4).unwrap());
        let once = transpile(&c, &info, &TranspileCache::new(0)).unwrap();
        let again = transpile(&c, &info, &TranspileCache::new(0)).unwrap();
        assert_eq!(once, again);
        let twice = transpile(&once.circuit, &info, &TranspileCache::new(0)).unwrap();
        assert_eq!(twice.circuit, once.circuit);
    }
}

#[test]
fn cached_result_equals_fresh() {
    let cache = TranspileCache::new(8);
    let info = DeviceInfo::for_coupling(CouplingMap::ring(5).unwrap());
    let mut rng = common::rng(5);
    let c = common::random_unitary_circuit(&mut rng, 5, 30);
    let fresh = transpile(&c, &info, &TranspileCache::new(0)).unwrap();
    transpile(&c, &info, &cache).unwrap();
    let hit = transpile(&c, &info, &cache).unwrap();
    assert_eq!(cache.stats().hits, 1);
    assert_eq!(*hit, *fresh);
}
