//! Fixed-format MPS export and a matching reader.
//!
//! Output sticks to the classic column layout (fields at columns 2, 5, 15,
//! 25, 40 and 50) so external solvers accept the files. Variable and row
//! names longer than eight characters are replaced by deterministic mangled
//! names; the mapping is reported back to the caller as a sidecar.

use std::collections::HashMap;

use thiserror::Error;

use super::{LinearProgram, Sense};

#[derive(Debug, Clone, Error)]
pub enum MpsError {
    #[error("mps parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Result of writing: the document plus the original-name sidecar for any
/// identifier that had to be mangled.
#[derive(Debug, Clone)]
pub struct MpsDocument {
    pub text: String,
    pub renamed: Vec<(String, String)>,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

fn mangle_all(names: &[String], prefix: char) -> (Vec<String>, Vec<(String, String)>) {
    let mut out = Vec::with_capacity(names.len());
    let mut renamed = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, name) in names.iter().enumerate() {
        let clean = sanitize(name);
        let ok = !clean.is_empty() && clean.len() <= 8 && !seen.contains_key(&clean);
        let final_name = if ok {
            clean
        } else {
            let mangled = format!("{prefix}{idx:07}");
            renamed.push((name.clone(), mangled.clone()));
            mangled
        };
        seen.insert(final_name.clone(), idx);
        out.push(final_name);
    }
    (out, renamed)
}

fn num(v: f64) -> String {
    // 12 significant-ish characters that survive a round-trip.
    let s = format!("{v:.10e}");
    let parsed: f64 = s.parse().unwrap_or(v);
    if parsed == v {
        // Prefer plain decimal when short enough.
        let plain = format!("{v}");
        if plain.len() <= 12 && plain.parse::<f64>().map_or(false, |p| p == v) {
            return plain;
        }
    }
    format!("{v:.9e}")
}

fn field_line(f1: &str, f2: &str, f3: &str, f4: &str, f5: &str, f6: &str) -> String {
    // Columns (1-indexed): 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
    let mut line = String::new();
    line.push(' ');
    line.push_str(&format!("{f1:<2}"));
    line.push(' ');
    line.push_str(&format!("{f2:<9}"));
    line.push_str(&format!("{f3:<10}"));
    line.push_str(&format!("{f4:<15}"));
    line.push_str(&format!("{f5:<10}"));
    line.push_str(f6);
    line.trim_end().to_string()
}

/// Serialize a program as fixed-format MPS (minimization, integrality via
/// MARKER lines, deterministic output bytes).
pub fn write_mps(lp: &LinearProgram) -> MpsDocument {
    let (var_names, mut renamed) = mangle_all(&lp.var_names, 'X');
    let row_name_src: Vec<String> = lp.rows.iter().map(|r| r.name.clone()).collect();
    let (row_names, renamed_rows) = mangle_all(&row_name_src, 'R');
    renamed.extend(renamed_rows);

    let mut text = String::new();
    let prob = {
        let clean = sanitize(&lp.name);
        if clean.is_empty() { "DFOKIT".to_string() } else { clean }
    };
    text.push_str(&format!("NAME          {prob}\n"));
    text.push_str("ROWS\n");
    text.push_str(" N  COST\n");
    for (i, row) in lp.rows.iter().enumerate() {
        let tag = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        text.push_str(&format!(" {}  {}\n", tag, row_names[i]));
    }

    // Column-major view of the coefficients.
    let n = lp.num_vars();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut merged: HashMap<usize, f64> = HashMap::new();
        for &(j, c) in &row.coeffs {
            *merged.entry(j).or_insert(0.0) += c;
        }
        let mut entries: Vec<_> = merged.into_iter().collect();
        entries.sort_by_key(|&(j, _)| j);
        for (j, c) in entries {
            if c != 0.0 {
                cols[j].push((i, c));
            }
        }
    }

    text.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker_count = 0usize;
    for j in 0..n {
        if lp.integer[j] != in_int {
            let kind = if lp.integer[j] { "'INTORG'" } else { "'INTEND'" };
            text.push_str(&format!(
                "    MARKER{marker_count:02}  'MARKER'                 {kind}\n"
            ));
            marker_count += 1;
            in_int = lp.integer[j];
        }
        let mut entries: Vec<(String, f64)> = Vec::new();
        if lp.objective[j] != 0.0 {
            entries.push(("COST".to_string(), lp.objective[j]));
        }
        for &(i, c) in &cols[j] {
            entries.push((row_names[i].clone(), c));
        }
        if entries.is_empty() {
            // Keep the column visible so the reader recreates the variable.
            entries.push(("COST".to_string(), 0.0));
        }
        for pair in entries.chunks(2) {
            let (r1, c1) = &pair[0];
            let line = if let Some((r2, c2)) = pair.get(1) {
                field_line("", &var_names[j], r1, &num(*c1), r2, &num(*c2))
            } else {
                field_line("", &var_names[j], r1, &num(*c1), "", "")
            };
            text.push_str(&line);
            text.push('\n');
        }
    }
    if in_int {
        text.push_str(&format!(
            "    MARKER{marker_count:02}  'MARKER'                 'INTEND'\n"
        ));
    }

    text.push_str("RHS\n");
    if lp.obj_offset != 0.0 {
        // Convention: the RHS of the objective row is the negated offset.
        let line = field_line("", "RHS", "COST", &num(-lp.obj_offset), "", "");
        text.push_str(&line);
        text.push('\n');
    }
    for (i, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let line = field_line("", "RHS", &row_names[i], &num(row.rhs), "", "");
            text.push_str(&line);
            text.push('\n');
        }
    }

    text.push_str("BOUNDS\n");
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let name = &var_names[j];
        // Default MPS bounds are [0, inf); only emit deviations.
        if lo == 0.0 && hi == f64::INFINITY {
            continue;
        }
        if lo == hi {
            text.push_str(&field_line("FX", "BND", name, &num(lo), "", ""));
            text.push('\n');
            continue;
        }
        if lo.is_infinite() && hi.is_infinite() {
            text.push_str(&field_line("FR", "BND", name, "", "", ""));
            text.push('\n');
            continue;
        }
        if lo.is_infinite() {
            text.push_str(&field_line("MI", "BND", name, "", "", ""));
            text.push('\n');
        } else if lo != 0.0 {
            text.push_str(&field_line("LO", "BND", name, &num(lo), "", ""));
            text.push('\n');
        }
        if hi.is_finite() {
            text.push_str(&field_line("UP", "BND", name, &num(hi), "", ""));
            text.push('\n');
        }
    }
    text.push_str("ENDATA\n");

    MpsDocument { text, renamed }
}

/// Parse MPS text produced by [`write_mps`] (whitespace-tolerant).
pub fn read_mps(text: &str) -> Result<LinearProgram, MpsError> {
    let mut lp = LinearProgram::new("MPS");
    let mut section = String::new();
    let mut row_ids: HashMap<String, usize> = HashMap::new();
    let mut var_ids: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;

    let err = |line: usize, message: &str| MpsError::Parse { line, message: message.into() };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') {
            let mut parts = raw.split_whitespace();
            let head = parts.next().unwrap_or("");
            section = head.to_string();
            if section == "NAME" {
                lp.name = parts.next().unwrap_or("MPS").to_string();
            }
            if section == "ENDATA" {
                break;
            }
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match section.as_str() {
            "ROWS" => {
                if fields.len() < 2 {
                    return Err(err(line_no, "short ROWS line"));
                }
                let sense = match fields[0] {
                    "N" => None,
                    "L" => Some(Sense::Le),
                    "G" => Some(Sense::Ge),
                    "E" => Some(Sense::Eq),
                    other => return Err(err(line_no, &format!("unknown row type {other}"))),
                };
                match sense {
                    None => {} // objective row named COST
                    Some(s) => {
                        let id = lp.add_row(fields[1], Vec::new(), s, 0.0);
                        row_ids.insert(fields[1].to_string(), id);
                    }
                }
            }
            "COLUMNS" => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    in_int = match *fields.last().unwrap() {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        other => return Err(err(line_no, &format!("bad marker {other}"))),
                    };
                    continue;
                }
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err(line_no, "malformed COLUMNS line"));
                }
                let var = *var_ids.entry(fields[0].to_string()).or_insert_with(|| {
                    lp.add_var(fields[0], 0.0, f64::INFINITY, 0.0, in_int)
                });
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(line_no, &format!("bad number {}", pair[1])))?;
                    if pair[0] == "COST" {
                        lp.objective[var] += value;
                    } else {
                        let row = *row_ids
                            .get(pair[0])
                            .ok_or_else(|| err(line_no, &format!("unknown row {}", pair[0])))?;
                        lp.rows[row].coeffs.push((var, value));
                    }
                }
            }
            "RHS" => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(err(line_no, "malformed RHS line"));
                }
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(line_no, &format!("bad number {}", pair[1])))?;
                    if pair[0] == "COST" {
                        lp.obj_offset = -value;
                    } else {
                        let row = *row_ids
                            .get(pair[0])
                            .ok_or_else(|| err(line_no, &format!("unknown row {}", pair[0])))?;
                        lp.rows[row].rhs = value;
                    }
                }
            }
            "RANGES" => {
                return Err(err(line_no, "RANGES section not supported"));
            }
            "BOUNDS" => {
                if fields.len() < 3 {
                    return Err(err(line_no, "short BOUNDS line"));
                }
                let var = *var_ids
                    .get(fields[2])
                    .ok_or_else(|| err(line_no, &format!("unknown column {}", fields[2])))?;
                let value = || -> Result<f64, MpsError> {
                    fields
                        .get(3)
                        .ok_or_else(|| err(line_no, "missing bound value"))?
                        .parse()
                        .map_err(|_| err(line_no, "bad bound value"))
                };
                match fields[0] {
                    "UP" => lp.upper[var] = value()?,
                    "LO" => lp.lower[var] = value()?,
                    "FX" => {
                        let v = value()?;
                        lp.lower[var] = v;
                        lp.upper[var] = v;
                    }
                    "FR" => {
                        lp.lower[var] = f64::NEG_INFINITY;
                        lp.upper[var] = f64::INFINITY;
                    }
                    "MI" => lp.lower[var] = f64::NEG_INFINITY,
                    "PL" => lp.upper[var] = f64::INFINITY,
                    "BV" => {
                        lp.lower[var] = 0.0;
                        lp.upper[var] = 1.0;
                        lp.integer[var] = true;
                    }
                    "UI" => {
                        lp.upper[var] = value()?;
                        lp.integer[var] = true;
                    }
                    "LI" => {
                        lp.lower[var] = value()?;
                        lp.integer[var] = true;
                    }
                    other => return Err(err(line_no, &format!("unknown bound type {other}"))),
                }
            }
            other => {
                return Err(err(line_no, &format!("line outside known section ({other})")));
            }
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_milp, SolverConfig};

    #[test]
    fn round_trip_preserves_value() {
        let mut lp = LinearProgram::new("rt");
        let z1 = lp.add_var("z1", 0.0, 1.0, -3.0, true);
        let z2 = lp.add_var("z2", 0.0, 1.0, -2.0, true);
        let x = lp.add_var("a_rather_long_variable_name", -1.5, 4.0, 0.5, false);
        lp.obj_offset = 2.25;
        lp.add_row("cap", vec![(z1, 2.0), (z2, 1.0), (x, 0.125)], Sense::Le, 2.0);
        lp.add_row("link", vec![(x, 1.0), (z1, -1.0)], Sense::Ge, -1.0);

        let doc = write_mps(&lp);
        assert!(doc.renamed.iter().any(|(orig, _)| orig.starts_with("a_rather")));
        let back = read_mps(&doc.text).unwrap();

        let cfg = SolverConfig::default();
        let a = solve_milp(&lp, &cfg).unwrap();
        let b = solve_milp(&back, &cfg).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-8);
    }

    #[test]
    fn bounds_only_program() {
        // min -x, x in [0, 1]: no constraint rows at all.
        let mut lp = LinearProgram::new("b");
        lp.add_var("x", 0.0, 1.0, -1.0, false);
        let doc = write_mps(&lp);
        assert!(doc.text.contains("BOUNDS"));
        let back = read_mps(&doc.text).unwrap();
        assert_eq!(back.rows.len(), 0);
        let sol = solve_milp(&back, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_bytes() {
        let mut lp = LinearProgram::new("det");
        let a = lp.add_var("a", 0.0, 2.0, 1.0, false);
        lp.add_row("r", vec![(a, 1.0)], Sense::Ge, 1.0);
        assert_eq!(write_mps(&lp).text, write_mps(&lp).text);
    }
}
