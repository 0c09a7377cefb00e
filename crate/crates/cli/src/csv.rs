//! Minimal CSV emission: header row first, `\n` line endings, floats with 17
//! significant digits so values parse back bit-exactly.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }
}

fn format_cell(c: &Cell) -> String {
    match *c {
        Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
        Cell::Float(v) if v.is_nan() => "NaN".to_string(),
        Cell::Float(v) => if v > 0.0 { "inf" } else { "-inf" }.to_string(),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(v) => v.to_string(),
    }
}

pub fn emit_csv(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(format_cell).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let mut t = Table::new(&["delta", "detuning", "eta", "converged"]);
        t.push(vec![0.6.into(), (-4.0).into(), 0.125.into(), true.into()]);
        assert_eq!(
            emit_csv(&t),
            "delta,detuning,eta,converged\n5.9999999999999998e-1,-4.0000000000000000e0,1.2500000000000000e-1,true\n"
        );
    }

    #[test]
    fn non_finite() {
        let mut t = Table::new(&["x"]);
        t.push(vec![f64::NAN.into()]);
        assert_eq!(emit_csv(&t), "x\nNaN\n");
    }

    proptest! {
        #[test]
        fn floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_cell(&Cell::Float(v));
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
