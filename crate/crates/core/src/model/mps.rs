//! Fixed-column MPS export.

use std::fmt::Write;

use super::program::{LinearProgram, Sense, VariableKey};

/// Shortest rendering of `v` that fits a 12-character MPS numeric field.
fn num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    (1..=10)
        .rev()
        .map(|digits| format!("{v:.digits$e}"))
        .find(|s| s.len() <= 12)
        .unwrap_or_else(|| format!("{v:.0e}"))
}

fn col_name(j: usize) -> String {
    format!("C{j:07}")
}

fn row_name(i: usize) -> String {
    format!("R{i:07}")
}

fn field_line(out: &mut String, code: &str, name1: &str, name2: &str, value: f64) {
    let _ = writeln!(out, " {code:<2} {name1:<8}  {name2:<8}  {:>12}", num(value));
}

/// Renders `lp` as fixed MPS. Columns are named `Cnnnnnnn` and rows `Rnnnnnnn`;
/// a comment block maps them back to variable keys (through `label`) and row names.
pub fn write_mps(lp: &LinearProgram, name: &str, label: impl Fn(&VariableKey) -> String) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* generated by band-core");
    for (j, v) in lp.variables.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", col_name(j), label(&v.key));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_name(i), c.name);
    }
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n N  COST\n");
    for (i, c) in lp.constraints.iter().enumerate() {
        let code = match c.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {code}  {}", row_name(i));
    }

    let mut by_column: Vec<Vec<(String, f64)>> = vec![Vec::new(); lp.n_variables()];
    for &(j, c) in &lp.objective {
        by_column[j].push(("COST".to_string(), c));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            by_column[j].push((row_name(i), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker = 0;
    for (j, entries) in by_column.iter().enumerate() {
        let integer = lp.variables[j].integer;
        if integer != in_integer_block {
            let kind = if integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:07}  'MARKER'                 {kind}");
            marker += 1;
            in_integer_block = integer;
        }
        let name = col_name(j);
        if entries.is_empty() {
            field_line(&mut out, "", &name, "COST", 0.0);
        }
        for (row, a) in entries {
            field_line(&mut out, "", &name, row, *a);
        }
    }
    if in_integer_block {
        let _ = writeln!(out, "    M{marker:07}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    if lp.objective_offset != 0.0 {
        field_line(&mut out, "", "RHS", "COST", -lp.objective_offset);
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            field_line(&mut out, "", "RHS", &row_name(i), c.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in lp.variables.iter().enumerate() {
        let name = col_name(j);
        if v.lower == v.upper {
            field_line(&mut out, "FX", "BND", &name, v.lower);
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {name}");
            continue;
        }
        if v.lower == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND       {name}");
        } else if v.lower != 0.0 {
            field_line(&mut out, "LO", "BND", &name, v.lower);
        }
        if v.upper.is_finite() {
            field_line(&mut out, "UP", "BND", &name, v.upper);
        }
    }
    out.push_str("ENDATA\n");
    out
}
