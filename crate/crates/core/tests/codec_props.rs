mod common;

use proptest::prelude::*;
use qal::circuit::{decode_binary, emit_text, encode_binary, parse_text, Circuit, Instruction, Opcode};

fn finite_f32() -> impl Strategy<Value = f32> {
    prop_oneof![
        any::<u32>()
            .prop_map(f32::from_bits)
            .prop_filter("finite", |v| v.is_finite()),
        -10.0f32..10.0f32,
        Just(-0.0f32),
    ]
}

fn instruction(nq: u16, nc: u16) -> impl Strategy<Value = Instruction> {
    let q = 0..nq as u8;
    let single = (
        prop::sample::select(vec![
            Opcode::H,
            Opcode::X,
            Opcode::Y,
            Opcode::Z,
            Opcode::S,
            Opcode::Sdg,
            Opcode::T,
            Opcode::Tdg,
            Opcode::Reset,
            Opcode::Barrier,
        ]),
        q.clone(),
    )
        .prop_map(|(op, q)| Instruction::single(op, q));
    let rot = (
        prop::sample::select(vec![Opcode::Rx, Opcode::Ry, Opcode::Rz]),
        q.clone(),
        finite_f32(),
    )
        .prop_map(|(op, q, a)| Instruction::rotation(op, q, a));
    let mut options: Vec<BoxedStrategy<Instruction>> =
        vec![single.boxed(), rot.boxed(), Just(Instruction::nop()).boxed()];
    if nq >= 2 {
        options.push(
            (
                prop::sample::select(vec![Opcode::Cnot, Opcode::Cz, Opcode::Swap]),
                q.clone(),
                q.clone(),
            )
                .prop_filter("distinct", |(_, a, b)| a != b)
                .prop_map(|(op, a, b)| Instruction::pair(op, a, b))
                .boxed(),
        );
    }
    if nc >= 1 {
        options.push((q, 0..nc as u8).prop_map(|(q, c)| Instruction::measure(q, c)).boxed());
    }
    prop::strategy::Union::new(options)
}

fn circuit() -> impl Strategy<Value = Circuit> {
    (1u16..=16, 0u16..=16).prop_flat_map(|(nq, nc)| {
        prop::collection::vec(instruction(nq, nc), 0..40).prop_map(move |ins| Circuit::with_instructions(nq, nc, ins))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn binary_round_trip(c in circuit()) {
        let bytes = encode_binary(&c).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 8 * c.len());
        let back = decode_binary(&bytes).unwrap();
        // compare bitwise so -0.0 and 0.0 are distinguished
        prop_assert_eq!(encode_binary(&back).unwrap(), bytes);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn text_round_trip(c in circuit()) {
        let text = emit_text(&c).unwrap();
        let back = parse_text(&text).unwrap();
        prop_assert_eq!(encode_binary(&back).unwrap(), encode_binary(&c).unwrap());
        prop_assert_eq!(emit_text(&back).unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    /// Arbitrary bytes behind a valid header: never panics; anything accepted
    /// is already canonical.
    #[test]
    fn decode_accepts_only_canonical(nq in 0u16..20, nc in 0u16..20, n in 0u32..6,
                                      body in prop::collection::vec(any::<u8>(), 0..56)) {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x5141_4C42u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&nq.to_le_bytes());
        bytes.extend_from_slice(&nc.to_le_bytes());
        bytes.extend_from_slice(&0u16.to_le_bytes());
        bytes.extend_from_slice(&n.to_le_bytes());
        bytes.extend_from_slice(&body);
        if let Ok(c) = decode_binary(&bytes) {
            prop_assert_eq!(encode_binary(&c).unwrap(), bytes);
        }
    }

    #[test]
    fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..128)) {
        if let Ok(c) = decode_binary(&bytes) {
            prop_assert_eq!(encode_binary(&c).unwrap(), bytes);
        }
    }
}

#[test]
fn encoding_is_deterministic() {
    let mut rng = common::rng(11);
    for _ in 0..50 {
        let c = common::random_circuit(&mut rng, 60);
        assert_eq!(encode_binary(&c).unwrap(), encode_binary(&c.clone()).unwrap());
    }
}
