//! `.bench` netlist interchange: `INPUT(x)`, `OUTPUT(x)`,
//! `x = GATE(a, b, ...)`, `#` comments. Gate names are case-insensitive;
//! net names are case-sensitive. Nets named `vcc`/`gnd` act as constant
//! pseudo-inputs and are folded away on parse.

use std::collections::HashMap;

use thiserror::Error;

use super::{Builder, GateKind, Netlist, NetlistError};

/// Inputs whose name starts with this prefix are classified as key inputs.
pub const KEY_INPUT_PREFIX: &str = "keyinput";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}, col {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error(transparent)]
    Invalid(#[from] NetlistError),
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> BenchError {
    BenchError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn gate_kind(name: &str) -> Option<GateKind> {
    Some(match name.to_ascii_uppercase().as_str() {
        "AND" => GateKind::And,
        "NAND" => GateKind::Nand,
        "OR" => GateKind::Or,
        "NOR" => GateKind::Nor,
        "XOR" => GateKind::Xor,
        "XNOR" => GateKind::Xnor,
        "NOT" | "INV" => GateKind::Not,
        "BUF" | "BUFF" => GateKind::Buf,
        "MUX" => GateKind::Mux,
        _ => return None,
    })
}

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#')
}

fn is_const_name(name: &str) -> bool {
    name.eq_ignore_ascii_case("vcc") || name.eq_ignore_ascii_case("gnd")
}

struct Line<'a> {
    no: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Line<'a> {
    fn col(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), BenchError> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(syntax(self.no, self.col(), format!("expected `{c}`")))
        }
    }

    fn name(&mut self) -> Result<&'a str, BenchError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_name_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            Err(syntax(self.no, self.col(), "expected a name"))
        } else {
            Ok(&self.text[start..self.pos])
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }
}

/// Parse `.bench` text into a validated netlist.
pub fn parse_bench(text: &str) -> Result<Netlist, BenchError> {
    let mut b = Builder::new();
    let mut outputs: Vec<&str> = Vec::new();
    let mut consts_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut line = Line {
            no,
            text: body,
            pos: 0,
        };
        if line.at_end() {
            continue;
        }
        let first = line.name()?;
        line.skip_ws();
        if line.peek() == Some('(') {
            // INPUT(x) or OUTPUT(x)
            line.expect('(')?;
            let net = line.name()?;
            line.expect(')')?;
            if !line.at_end() {
                return Err(syntax(no, line.col(), "trailing text after declaration"));
            }
            if first.eq_ignore_ascii_case("INPUT") {
                if is_const_name(net) {
                    consts_seen = true;
                    let id = b.intern(net);
                    if !b.is_driven(id) {
                        let val = net.eq_ignore_ascii_case("vcc");
                        b.drive(id, GateKind::Const(val), vec![]);
                    }
                } else {
                    let id = b.intern(net);
                    if b.is_driven(id) {
                        return Err(NetlistError::DuplicateDriver(net.to_string()).into());
                    }
                    if net.to_ascii_lowercase().starts_with(KEY_INPUT_PREFIX) {
                        b.mark_key_input(id);
                    } else {
                        b.mark_input(id);
                    }
                }
            } else if first.eq_ignore_ascii_case("OUTPUT") {
                outputs.push(net);
                b.intern(net);
            } else {
                return Err(syntax(no, 1, format!("unknown declaration `{first}`")));
            }
        } else if line.peek() == Some('=') {
            line.expect('=')?;
            let kind_name = line.name()?;
            let kind_col = line.pos - kind_name.len() + 1;
            let Some(kind) = gate_kind(kind_name) else {
                return Err(syntax(no, kind_col, format!("unknown gate `{kind_name}`")));
            };
            line.expect('(')?;
            let mut fanin = Vec::new();
            loop {
                let arg = line.name()?;
                if is_const_name(arg) {
                    consts_seen = true;
                }
                fanin.push(b.intern(arg));
                line.skip_ws();
                match line.peek() {
                    Some(',') => {
                        line.expect(',')?;
                    }
                    Some(')') => break,
                    _ => return Err(syntax(no, line.col(), "expected `,` or `)`")),
                }
            }
            line.expect(')')?;
            if !line.at_end() {
                return Err(syntax(no, line.col(), "trailing text after gate"));
            }
            let out = b.intern(first);
            if b.is_driven(out) {
                return Err(NetlistError::DuplicateDriver(first.to_string()).into());
            }
            if !kind.arity_ok(fanin.len()) {
                return Err(syntax(
                    no,
                    1,
                    format!(
                        "gate `{}` of kind {} has invalid arity {}",
                        first,
                        kind.name(),
                        fanin.len()
                    ),
                ));
            }
            b.drive(out, kind, fanin);
        } else {
            return Err(syntax(no, line.col(), "expected `(` or `=`"));
        }
    }

    // Bare references to vcc/gnd without an INPUT declaration.
    for name in ["vcc", "gnd", "VCC", "GND"] {
        if let Some(id) = b.name_id(name) {
            if !b.is_driven(id) {
                consts_seen = true;
                b.drive(id, GateKind::Const(name.eq_ignore_ascii_case("vcc")), vec![]);
            }
        }
    }
    for net in outputs {
        let id = b.intern(net);
        b.mark_output(id);
    }
    let netlist = b.finish()?;
    if consts_seen {
        Ok(netlist.apply_constants(&HashMap::new()))
    } else {
        Ok(netlist)
    }
}

/// Serialize a netlist to `.bench` text.
///
/// LUT gates are lowered to MUX/NOT trees over their table constants;
/// constant drivers become buffered `vcc`/`gnd` pseudo-inputs. The result
/// always parses back to a functionally equivalent netlist, and to an
/// isomorphic one when no lowering was needed.
pub fn write_bench(n: &Netlist) -> String {
    let mut gates = String::new();
    let mut lower = Lowerer {
        used: n
            .primary_inputs()
            .iter()
            .chain(n.key_inputs())
            .chain(n.primary_outputs())
            .map(|&id| n.net_name(id).to_string())
            .chain(n.gates().iter().map(|g| n.net_name(g.output).to_string()))
            .collect(),
        counter: 0,
        vcc: false,
        gnd: false,
    };
    for &g in n.topo_order() {
        let gate = n.gate(g);
        let out = n.net_name(gate.output);
        let args: Vec<&str> = gate.fanin.iter().map(|&f| n.net_name(f)).collect();
        match &gate.kind {
            GateKind::Lut(table) => {
                let expr = lower.lut(&mut gates, table, &args);
                gates.push_str(&format!("{out} = BUF({expr})\n"));
            }
            GateKind::Const(c) => {
                gates.push_str(&format!("{out} = BUF({})\n", lower.constant(*c)));
            }
            kind => {
                gates.push_str(&format!("{out} = {}({})\n", kind.name(), args.join(", ")));
            }
        }
    }
    let mut text = String::new();
    for &id in n.primary_inputs() {
        text.push_str(&format!("INPUT({})\n", n.net_name(id)));
    }
    for &id in n.key_inputs() {
        text.push_str(&format!("INPUT({})\n", n.net_name(id)));
    }
    if lower.vcc {
        text.push_str("INPUT(vcc)\n");
    }
    if lower.gnd {
        text.push_str("INPUT(gnd)\n");
    }
    for &id in n.primary_outputs() {
        text.push_str(&format!("OUTPUT({})\n", n.net_name(id)));
    }
    text.push_str(&gates);
    text
}

struct Lowerer {
    used: std::collections::HashSet<String>,
    counter: u64,
    vcc: bool,
    gnd: bool,
}

impl Lowerer {
    fn fresh(&mut self) -> String {
        loop {
            let name = format!("lut{}", self.counter);
            self.counter += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    fn constant(&mut self, val: bool) -> &'static str {
        if val {
            self.vcc = true;
            "vcc"
        } else {
            self.gnd = true;
            "gnd"
        }
    }

    /// Emit gates computing the LUT over `pins`, returning the net name
    /// holding the result. Shannon expansion on the highest pin.
    fn lut(&mut self, gates: &mut String, table: &[bool], pins: &[&str]) -> String {
        if table.iter().all(|&t| t) {
            return self.constant(true).to_string();
        }
        if table.iter().all(|&t| !t) {
            return self.constant(false).to_string();
        }
        if pins.len() == 1 {
            return if table[0] {
                // [1, 0] -> NOT(pin)
                let name = self.fresh();
                gates.push_str(&format!("{name} = NOT({})\n", pins[0]));
                name
            } else {
                // [0, 1] -> pin
                pins[0].to_string()
            };
        }
        let top = pins.len() - 1;
        let half = table.len() / 2;
        let (lo_tbl, hi_tbl) = table.split_at(half);
        if lo_tbl == hi_tbl {
            return self.lut(gates, lo_tbl, &pins[..top]);
        }
        let sel = pins[top];
        let lo_const = all_same(lo_tbl);
        let hi_const = all_same(hi_tbl);
        let name = self.fresh();
        match (lo_const, hi_const) {
            (Some(false), Some(true)) => {
                gates.push_str(&format!("{name} = BUF({sel})\n"));
            }
            (Some(true), Some(false)) => {
                gates.push_str(&format!("{name} = NOT({sel})\n"));
            }
            (Some(false), None) => {
                let hi = self.lut(gates, hi_tbl, &pins[..top]);
                gates.push_str(&format!("{name} = AND({sel}, {hi})\n"));
            }
            (Some(true), None) => {
                let hi = self.lut(gates, hi_tbl, &pins[..top]);
                let inv = self.fresh();
                gates.push_str(&format!("{inv} = NOT({sel})\n"));
                gates.push_str(&format!("{name} = OR({inv}, {hi})\n"));
            }
            (None, Some(false)) => {
                let lo = self.lut(gates, lo_tbl, &pins[..top]);
                let inv = self.fresh();
                gates.push_str(&format!("{inv} = NOT({sel})\n"));
                gates.push_str(&format!("{name} = AND({inv}, {lo})\n"));
            }
            (None, Some(true)) => {
                let lo = self.lut(gates, lo_tbl, &pins[..top]);
                gates.push_str(&format!("{name} = OR({sel}, {lo})\n"));
            }
            _ => {
                let lo = self.lut(gates, lo_tbl, &pins[..top]);
                let hi = self.lut(gates, hi_tbl, &pins[..top]);
                gates.push_str(&format!("{name} = MUX({sel}, {lo}, {hi})\n"));
            }
        }
        name
    }
}

fn all_same(table: &[bool]) -> Option<bool> {
    if table.iter().all(|&t| t == table[0]) {
        Some(table[0])
    } else {
        None
    }
}
