//! QALT, the line-oriented assembly form of a circuit.
//!
//! ```text
//! # Bell pair
//! .qubits 2
//! .cbits 2
//! h q0
//! cx q0, q1
//! rz(pi/4) q1
//! measure q0 -> c0
//! measure q1 -> c1
//! ```
//!
//! Angles are decimal literals or products/quotients of literals and `pi`.
//! `nop` takes no operands.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Arity, Circuit, CircuitError, Instruction, Opcode, MAX_CBITS, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

impl TextError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            TextError::Syntax { line, col, .. } | TextError::Semantic { line, col, .. } => (*line, *col),
        }
    }
}

/// Renders an angle as the shortest decimal that parses back to the same f32.
pub fn format_angle(x: f32) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e9).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Canonical text form: both directives, then one instruction per line.
pub fn emit_text(c: &Circuit) -> Result<String, CircuitError> {
    c.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, ".qubits {}", c.num_qubits);
    let _ = writeln!(out, ".cbits {}", c.num_cbits);
    for ins in &c.instructions {
        let m = ins.opcode.mnemonic();
        let _ = match ins.opcode.arity() {
            Arity::None => writeln!(out, "{m}"),
            Arity::Single => writeln!(out, "{m} q{}", ins.q0),
            Arity::Rotation => writeln!(out, "{m}({}) q{}", format_angle(ins.param), ins.q0),
            Arity::Pair => writeln!(out, "{m} q{}, q{}", ins.q0, ins.q1),
            Arity::Measure => writeln!(out, "{m} q{} -> c{}", ins.q0, ins.cbit),
        };
    }
    Ok(out)
}

pub fn parse_text(s: &str) -> Result<Circuit, TextError> {
    let mut qubits: Option<(u16, usize)> = None;
    let mut cbits: Option<u16> = None;
    let mut instructions = Vec::new();
    let mut seen_instruction = false;

    for (idx, raw) in s.lines().enumerate() {
        let line_no = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut cur = Cursor::new(content, line_no);
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        if cur.peek() == Some('.') {
            let col = cur.col();
            cur.bump();
            let name = cur.word();
            cur.skip_ws();
            let value_col = cur.col();
            let value = cur.number_u32()?;
            cur.expect_end()?;
            if seen_instruction {
                return Err(cur.semantic_at(col, "directives must precede instructions"));
            }
            match name {
                "qubits" => {
                    if qubits.is_some() {
                        return Err(cur.semantic_at(col, "duplicate .qubits directive"));
                    }
                    if !(1..=u32::from(MAX_QUBITS)).contains(&value) {
                        return Err(
                            cur.semantic_at(value_col, &format!("qubit count {value} outside 1..={MAX_QUBITS}"))
                        );
                    }
                    qubits = Some((value as u16, line_no));
                }
                "cbits" => {
                    if cbits.is_some() {
                        return Err(cur.semantic_at(col, "duplicate .cbits directive"));
                    }
                    if value > u32::from(MAX_CBITS) {
                        return Err(cur.semantic_at(
                            value_col,
                            &format!("classical bit count {value} outside 0..={MAX_CBITS}"),
                        ));
                    }
                    cbits = Some(value as u16);
                }
                other => {
                    return Err(cur.syntax_at(col, &format!("unknown directive .{other}")));
                }
            }
            continue;
        }

        let mnemonic_col = cur.col();
        let mnemonic = cur.word();
        if mnemonic.is_empty() {
            return Err(cur.syntax("expected a mnemonic"));
        }
        let opcode = Opcode::from_mnemonic(mnemonic)
            .ok_or_else(|| cur.syntax_at(mnemonic_col, &format!("unknown mnemonic '{mnemonic}'")))?;
        let Some((nq, _)) = qubits else {
            return Err(cur.semantic_at(mnemonic_col, "missing .qubits directive before first instruction"));
        };
        let nc = cbits.unwrap_or(0);
        seen_instruction = true;

        let arity = opcode.arity();
        let mut param = 0.0f32;
        if cur.peek() == Some('(') {
            if arity != Arity::Rotation {
                return Err(cur.syntax(&format!("'{mnemonic}' takes no angle")));
            }
            cur.bump();
            param = cur.angle()?;
            cur.skip_ws();
            cur.expect_char(')')?;
        } else if arity == Arity::Rotation {
            return Err(cur.syntax(&format!("'{mnemonic}' requires an angle, e.g. {mnemonic}(pi/2)")));
        }

        let ins = match arity {
            Arity::None => Instruction::nop(),
            Arity::Single | Arity::Rotation => {
                cur.skip_ws();
                let q = cur.register('q', nq, "qubit")?;
                Instruction::raw(opcode, q, 0, 0, param)
            }
            Arity::Pair => {
                cur.skip_ws();
                let a = cur.register('q', nq, "qubit")?;
                cur.skip_ws();
                cur.expect_char(',')?;
                cur.skip_ws();
                let b_col = cur.col();
                let b = cur.register('q', nq, "qubit")?;
                if a == b {
                    return Err(cur.semantic_at(b_col, &format!("'{mnemonic}' needs two distinct qubits")));
                }
                Instruction::pair(opcode, a, b)
            }
            Arity::Measure => {
                cur.skip_ws();
                let q = cur.register('q', nq, "qubit")?;
                cur.skip_ws();
                cur.expect_char('-')?;
                cur.expect_char('>')?;
                cur.skip_ws();
                let c = cur.register('c', nc, "classical bit")?;
                Instruction::measure(q, c)
            }
        };
        cur.expect_end()?;
        instructions.push(ins);
    }

    let Some((nq, _)) = qubits else {
        return Err(TextError::Semantic {
            line: s.lines().count().max(1),
            col: 1,
            msg: "missing .qubits directive".into(),
        });
    };
    Ok(Circuit::with_instructions(nq, cbits.unwrap_or(0), instructions))
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self {
            chars: src.char_indices().collect(),
            src,
            pos: 0,
            line,
        }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn byte_at(&self, pos: usize) -> usize {
        self.chars.get(pos).map_or(self.src.len(), |&(b, _)| b)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if f(c)) {
            self.pos += 1;
        }
        &self.src[self.byte_at(start)..self.byte_at(self.pos)]
    }

    fn word(&mut self) -> &'a str {
        self.take_while(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    fn syntax(&self, msg: &str) -> TextError {
        self.syntax_at(self.col(), msg)
    }

    fn syntax_at(&self, col: usize, msg: &str) -> TextError {
        TextError::Syntax {
            line: self.line,
            col,
            msg: msg.to_string(),
        }
    }

    fn semantic_at(&self, col: usize, msg: &str) -> TextError {
        TextError::Semantic {
            line: self.line,
            col,
            msg: msg.to_string(),
        }
    }

    fn expect_char(&mut self, want: char) -> Result<(), TextError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.syntax(&format!("expected '{want}', found '{c}'"))),
            None => Err(self.syntax(&format!("expected '{want}', found end of line"))),
        }
    }

    fn expect_end(&mut self) -> Result<(), TextError> {
        self.skip_ws();
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.syntax(&format!("unexpected '{c}'"))),
        }
    }

    fn number_u32(&mut self) -> Result<u32, TextError> {
        let col = self.col();
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            return Err(self.syntax_at(col, "expected a non-negative integer"));
        }
        digits.parse().map_err(|_| self.syntax_at(col, "integer too large"))
    }

    /// `q3` / `c1`, range-checked against `limit`.
    fn register(&mut self, prefix: char, limit: u16, what: &str) -> Result<u8, TextError> {
        let col = self.col();
        match self.peek() {
            Some(c) if c == prefix => self.bump(),
            _ => return Err(self.syntax(&format!("expected {what} operand '{prefix}<index>'"))),
        }
        let index = self.number_u32()?;
        if index >= u32::from(limit) {
            return Err(self.semantic_at(col, &format!("{what} {prefix}{index} out of range (declared {limit})")));
        }
        Ok(index as u8)
    }

    fn angle(&mut self) -> Result<f32, TextError> {
        self.skip_ws();
        let col = self.col();
        let negative = match self.peek() {
            Some('-') => {
                self.bump();
                true
            }
            Some('+') => {
                self.bump();
                false
            }
            _ => false,
        };
        let (first, exact) = self.angle_term()?;
        let mut value = first;
        let mut single_literal = exact;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.bump();
                    value *= self.angle_term()?.0;
                }
                Some('/') => {
                    self.bump();
                    let d = self.angle_term()?.0;
                    if d == 0.0 {
                        return Err(self.syntax_at(col, "division by zero in angle"));
                    }
                    value /= d;
                }
                _ => break,
            }
            single_literal = None;
        }
        // A lone literal is parsed straight to f32 so that emitted text
        // reproduces the stored bits exactly.
        let value = match single_literal {
            Some(v) => {
                if negative {
                    -v
                } else {
                    v
                }
            }
            None => {
                let v = if negative { -value } else { value };
                v as f32
            }
        };
        if !value.is_finite() {
            return Err(self.semantic_at(col, "angle is not a finite f32"));
        }
        Ok(value)
    }

    fn angle_term(&mut self) -> Result<(f64, Option<f32>), TextError> {
        self.skip_ws();
        let col = self.col();
        if self.peek() == Some('p') {
            let w = self.word();
            if w == "pi" {
                return Ok((std::f64::consts::PI, None));
            }
            return Err(self.syntax_at(col, &format!("unexpected '{w}' in angle")));
        }
        let start = self.pos;
        let _ = self.take_while(|c| c.is_ascii_digit() || c == '.');
        if matches!(self.peek(), Some('e' | 'E')) {
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            let _ = self.take_while(|c| c.is_ascii_digit());
        }
        let text = &self.src[self.byte_at(start)..self.byte_at(self.pos)];
        let wide: f64 = text
            .parse()
            .map_err(|_| self.syntax_at(col, "expected a number or 'pi' in angle"))?;
        let narrow: f32 = text.parse().map_err(|_| self.syntax_at(col, "bad number"))?;
        Ok((wide, Some(narrow)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_program() {
        let c = parse_text(".qubits 1\n.cbits 1\nh q0\nmeasure q0 -> c0").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.num_cbits, 1);
        assert_eq!(
            c.instructions,
            vec![Instruction::single(Opcode::H, 0), Instruction::measure(0, 0)]
        );
    }

    #[test]
    fn out_of_range_qubit() {
        let err = parse_text(".qubits 2\nh q5\n").unwrap_err();
        assert!(matches!(err, TextError::Semantic { line: 2, col: 3, .. }), "{err}");
    }

    #[test]
    fn missing_qubits_directive() {
        let err = parse_text("h q0\n").unwrap_err();
        assert!(matches!(err, TextError::Semantic { line: 1, .. }));
        assert!(matches!(parse_text("").unwrap_err(), TextError::Semantic { .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_text(".qubits 2\ncx q0 q1\n").unwrap_err();
        assert_eq!(err.position(), (2, 7));
        let err = parse_text(".qubits 2\nfoo q0\n").unwrap_err();
        assert_eq!(err.position(), (2, 1));
        let err = parse_text(".qubits 2\nrz q0\n").unwrap_err();
        assert!(matches!(err, TextError::Syntax { line: 2, .. }));
        let err = parse_text(".qubits 2\nh q0\n.cbits 1\n").unwrap_err();
        assert!(matches!(err, TextError::Semantic { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let src = "# header\n\n.qubits 2   # two\n.cbits 0\n\n  x q1  # flip\n";
        let c = parse_text(src).unwrap();
        assert_eq!(c.instructions, vec![Instruction::single(Opcode::X, 1)]);
    }

    #[test]
    fn empty_circuit_canonical_text() {
        assert_eq!(emit_text(&Circuit::new(1, 0)).unwrap(), ".qubits 1\n.cbits 0\n");
    }

    #[test]
    fn bell_canonical_text() {
        let text = emit_text(&Circuit::bell()).unwrap();
        let lines: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(lines, ["h q0", "cx q0, q1", "measure q0 -> c0", "measure q1 -> c1"]);
    }

    #[test]
    fn angle_rendering() {
        let quarter = std::f32::consts::FRAC_PI_4;
        let c = Circuit::with_instructions(1, 0, vec![Instruction::rotation(Opcode::Rz, 0, quarter)]);
        let text = emit_text(&c).unwrap();
        assert_eq!(text.lines().nth(2), Some("rz(0.7853982) q0"));
        // eight-digit spelling lands on the same f32
        let eight = parse_text(".qubits 1\nrz(0.78539816) q0").unwrap();
        assert_eq!(eight.instructions[0].param.to_bits(), quarter.to_bits());
        let pi_form = parse_text(".qubits 1\nrz(pi/4) q0").unwrap();
        assert_eq!(pi_form.instructions[0].param.to_bits(), quarter.to_bits());
        let neg = parse_text(".qubits 1\nrx(-pi/2) q0\nry(2*pi) q0\nrz(1e-30) q0").unwrap();
        assert_eq!(neg.instructions[0].param, -std::f32::consts::FRAC_PI_2);
        assert_eq!(neg.instructions[1].param, std::f32::consts::TAU);
        assert_eq!(neg.instructions[2].param, 1e-30);
    }

    #[test]
    fn format_angle_round_trips_extremes() {
        for x in [f32::MAX, f32::MIN_POSITIVE, 1e-45, -0.0, 0.1, 3.0, -123456.79, 1.0e9] {
            let s = format_angle(x);
            assert_eq!(s.parse::<f32>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn nop_has_no_operands() {
        let c = parse_text(".qubits 1\nnop\n").unwrap();
        assert_eq!(c.instructions, vec![Instruction::nop()]);
        assert!(parse_text(".qubits 1\nnop q0\n").is_err());
    }
}
