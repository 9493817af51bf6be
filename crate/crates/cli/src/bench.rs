//! BENCH structural netlists.
//!
//! ```text
//! # comment
//! INPUT(A)
//! OUTPUT(Y)
//! Y = NAND(A, B)
//! ```
//!
//! Keywords are case-insensitive and whitespace is insignificant. Signal
//! names are case-sensitive and may contain any character except
//! whitespace, `(`, `)`, `,`, `=` and `#`.

use std::fmt;
use std::fmt::Write as _;

use epp_core::{GateKind, Netlist, NetlistBuilder, NetlistError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BenchError {
    Syntax { line: u32, col: u32, message: String },
    UnsupportedGate { keyword: String, line: u32, col: u32 },
    Netlist(NetlistError),
}

impl BenchError {
    /// Short class name, stable across releases.
    pub fn class(&self) -> &'static str {
        match self {
            BenchError::Syntax { .. } => "syntax",
            BenchError::UnsupportedGate { .. } => "unsupported-gate",
            BenchError::Netlist(NetlistError::UndefinedSignal { .. }) => "undefined-signal",
            BenchError::Netlist(NetlistError::MultipleDrivers { .. }) => "multiple-drivers",
            BenchError::Netlist(NetlistError::CombinationalCycle { .. }) => "cycle",
            BenchError::Netlist(NetlistError::Arity { .. }) => "arity",
            BenchError::Netlist(NetlistError::NoCapturePoints) => "no-capture-points",
            BenchError::Netlist(NetlistError::UnknownNet(_)) => "unknown-net",
        }
    }
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Syntax { line, col, message } => write!(f, "line {line}, column {col}: {message}"),
            BenchError::UnsupportedGate { keyword, line, col } => {
                write!(f, "line {line}, column {col}: unsupported gate `{keyword}`")
            }
            BenchError::Netlist(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<NetlistError> for BenchError {
    fn from(e: NetlistError) -> Self {
        BenchError::Netlist(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok<'s> {
    Word(&'s str),
    Open,
    Close,
    Comma,
    Eq,
}

struct Lexer<'s> {
    text: &'s str,
    pos: usize,
    line: u32,
}

impl<'s> Lexer<'s> {
    fn col(&self, at: usize) -> u32 {
        self.text[..at].chars().count() as u32 + 1
    }

    fn err(&self, at: usize, message: impl Into<String>) -> BenchError {
        BenchError::Syntax { line: self.line, col: self.col(at), message: message.into() }
    }

    /// Next token and its byte offset, or `None` at end of line.
    fn next(&mut self) -> Option<(Tok<'s>, usize)> {
        let rest = &self.text[self.pos..];
        let skipped = rest.len() - rest.trim_start().len();
        self.pos += skipped;
        let start = self.pos;
        let c = self.text[start..].chars().next()?;
        let tok = match c {
            '#' => {
                self.pos = self.text.len();
                return None;
            }
            '(' => Tok::Open,
            ')' => Tok::Close,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            _ => {
                let len = self.text[start..]
                    .find(|c: char| c.is_whitespace() || "(),=#".contains(c))
                    .unwrap_or(self.text.len() - start);
                self.pos += len;
                return Some((Tok::Word(&self.text[start..start + len]), start));
            }
        };
        self.pos += 1;
        Some((tok, start))
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<usize, BenchError> {
        match self.next() {
            Some((t, at)) if t == want => Ok(at),
            Some((_, at)) => Err(self.err(at, format!("expected {what}"))),
            None => Err(self.err(self.text.len(), format!("expected {what} before end of line"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(&'s str, usize), BenchError> {
        match self.next() {
            Some((Tok::Word(w), at)) => Ok((w, at)),
            Some((_, at)) => Err(self.err(at, format!("expected {what}"))),
            None => Err(self.err(self.text.len(), format!("expected {what} before end of line"))),
        }
    }

    fn end(&mut self) -> Result<(), BenchError> {
        match self.next() {
            None => Ok(()),
            Some((_, at)) => Err(self.err(at, "unexpected text after statement")),
        }
    }
}

/// Parses BENCH text into a validated netlist called `name`.
pub fn parse_bench(text: &str, name: &str) -> Result<Netlist, BenchError> {
    let mut b = NetlistBuilder::new(name);
    for (i, raw) in text.lines().enumerate() {
        let line = i as u32 + 1;
        let mut lx = Lexer { text: raw, pos: 0, line };
        let Some((first, at)) = lx.next() else { continue };
        let Tok::Word(first) = first else {
            return Err(lx.err(at, "expected a declaration or gate assignment"));
        };
        b.set_line(Some(line));
        match lx.next() {
            Some((Tok::Open, _)) => {
                let (signal, _) = lx.word("signal name")?;
                lx.expect(Tok::Close, "`)`")?;
                lx.end()?;
                if first.eq_ignore_ascii_case("INPUT") {
                    b.input(signal);
                } else if first.eq_ignore_ascii_case("OUTPUT") {
                    b.output(signal);
                } else {
                    return Err(lx.err(at, format!("unknown declaration `{first}`")));
                }
            }
            Some((Tok::Eq, _)) => {
                let (keyword, kat) = lx.word("gate keyword")?;
                let kind = match GateKind::from_keyword(keyword) {
                    Some(k) => k,
                    None => return Err(BenchError::UnsupportedGate { keyword: keyword.to_string(), line, col: lx.col(kat) }),
                };
                lx.expect(Tok::Open, "`(`")?;
                let mut inputs = Vec::new();
                loop {
                    match lx.next() {
                        Some((Tok::Close, _)) if inputs.is_empty() => break,
                        Some((Tok::Word(w), _)) => inputs.push(w),
                        Some((_, at)) => return Err(lx.err(at, "expected signal name")),
                        None => return Err(lx.err(raw.len(), "expected signal name before end of line")),
                    }
                    match lx.next() {
                        Some((Tok::Comma, _)) => {}
                        Some((Tok::Close, _)) => break,
                        Some((_, at)) => return Err(lx.err(at, "expected `,` or `)`")),
                        None => return Err(lx.err(raw.len(), "expected `)` before end of line")),
                    }
                }
                lx.end()?;
                b.gate(first, kind, inputs);
            }
            Some((_, at)) => return Err(lx.err(at, "expected `(` or `=`")),
            None => return Err(lx.err(raw.len(), "incomplete statement")),
        }
    }
    Ok(b.build()?)
}

/// Writes `netlist` as BENCH text. Definitions appear in net id order and
/// outputs in declaration order, so parsing the result reproduces the
/// same netlist.
pub fn emit_bench(netlist: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", netlist.name());
    let _ = writeln!(
        out,
        "# {} inputs, {} outputs, {} flip-flops, {} gates",
        netlist.primary_inputs().len(),
        netlist.primary_outputs().len(),
        netlist.ff_outputs().len(),
        netlist.logic_gate_count()
    );
    let mut outputs_done = false;
    let emit_outputs = |out: &mut String| {
        out.push('\n');
        for &o in netlist.primary_outputs() {
            let _ = writeln!(out, "OUTPUT({})", netlist.net_name(o));
        }
        out.push('\n');
    };
    for net in netlist.nets() {
        let gate = netlist.gate(net);
        if gate.kind == GateKind::Input {
            let _ = writeln!(out, "INPUT({})", netlist.net_name(net));
            continue;
        }
        if !outputs_done {
            emit_outputs(&mut out);
            outputs_done = true;
        }
        let args: Vec<&str> = gate.inputs.iter().map(|&i| netlist.net_name(i)).collect();
        let _ = writeln!(out, "{} = {}({})", netlist.net_name(net), gate.kind.keyword(), args.join(", "));
    }
    if !outputs_done {
        emit_outputs(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn and_example() {
        let n = parse_bench("INPUT(A)\nINPUT(B)\nOUTPUT(Y)\nY = AND(A, B)", "and").unwrap();
        assert_eq!(n.primary_inputs().len(), 2);
        assert_eq!(n.primary_outputs().len(), 1);
        assert_eq!(n.logic_gate_count(), 1);
        assert_eq!(n.net_count(), 3);
    }

    #[test]
    fn keywords_ignore_case_and_spacing() {
        let text = "  input ( a )   # first\n\tInPuT(b)\noutput(y)\n\n#only a comment\ny=nand( a ,b )\nz = inv(y)\n";
        let n = parse_bench(text, "t").unwrap();
        let y = n.find("y").unwrap();
        assert_eq!(n.kind(y), GateKind::Nand);
        assert_eq!(n.kind(n.find("z").unwrap()), GateKind::Not);
    }

    #[test]
    fn names_with_punctuation() {
        let n = parse_bench("INPUT(a[0])\nINPUT(b.1)\nOUTPUT(y$2)\ny$2 = XOR(a[0], b.1)", "p").unwrap();
        assert!(n.find("a[0]").is_some());
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = AND(A,, A)", "s").unwrap_err();
        assert_eq!(e, BenchError::Syntax { line: 3, col: 11, message: "expected signal name".into() });
        let e = parse_bench("INPUT(A\n", "s").unwrap_err();
        assert!(matches!(e, BenchError::Syntax { line: 1, col: 8, .. }), "{e}");
        let e = parse_bench("Y AND(A)", "s").unwrap_err();
        assert!(matches!(e, BenchError::Syntax { line: 1, col: 3, .. }), "{e}");
        let e = parse_bench("WIRE(A)", "s").unwrap_err();
        assert_eq!(e.class(), "syntax");
        let e = parse_bench("INPUT(A) B", "s").unwrap_err();
        assert!(matches!(e, BenchError::Syntax { col: 10, .. }), "{e}");
    }

    #[test]
    fn validation_errors() {
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = AND(A, Z)", "u").unwrap_err();
        assert_eq!(e.class(), "undefined-signal");
        assert!(e.to_string().contains("`Z`"));
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = NOT(A)\nY = BUFF(A)", "m").unwrap_err();
        assert_eq!(e.to_string(), "line 4: signal `Y` has multiple drivers");
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = AND(A, X)\nX = OR(A, Y)", "c").unwrap_err();
        assert_eq!(e.class(), "cycle");
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = MUX(A, A)", "g").unwrap_err();
        assert_eq!(e, BenchError::UnsupportedGate { keyword: "MUX".into(), line: 3, col: 5 });
        let e = parse_bench("INPUT(A)\nOUTPUT(Y)\nY = AND(A)", "a").unwrap_err();
        assert_eq!(e.class(), "arity");
    }

    #[test]
    fn dff_boundary() {
        let n = parse_bench("INPUT(A)\nOUTPUT(Q)\nQ = DFF(A)", "d").unwrap();
        let (a, q) = (n.find("A").unwrap(), n.find("Q").unwrap());
        assert_eq!(n.ff_outputs(), [q]);
        assert_eq!(n.ff_inputs(), [a]);
        assert_eq!(n.primary_outputs(), [q]);
    }

    #[test]
    fn round_trip() {
        let text = "OUTPUT(Y)\nOUTPUT(Q)\nY = AND(A, Q)\nINPUT(A)\nQ = DFF(Z)\nZ = XNOR(A, Y, Q)\nINPUT(B)\nW = BUFF(B)\nOUTPUT(W)";
        let n = parse_bench(text, "r").unwrap();
        let emitted = emit_bench(&n);
        let again = parse_bench(&emitted, "r").unwrap();
        assert_eq!(again, n);
        assert_eq!(emit_bench(&again), emitted);
        let outs: Vec<&str> = again.primary_outputs().iter().map(|&o| again.net_name(o)).collect();
        assert_eq!(outs, ["Y", "Q", "W"]);
    }
}
