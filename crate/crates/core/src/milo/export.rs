//! Row-oriented (LP) and column-oriented (free MPS) text export.
//!
//! Output is ASCII with LF line endings. Names and row order come straight
//! from [`MiloModel`], so exporting the same model twice yields identical
//! bytes.

use std::fmt::Write;

use super::{MiloModel, Sense, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Lp,
    Mps,
}

impl std::str::FromStr for ModelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lp-text" => Ok(ModelFormat::Lp),
            "mps" | "mps-text" => Ok(ModelFormat::Mps),
            _ => Err(Error::UnsupportedFormat(s.to_owned())),
        }
    }
}

const TERMS_PER_LINE: usize = 5;

/// Shortest round-trip decimal; exponent form for very small or large values.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn export_model(m: &MiloModel, format: ModelFormat) -> Result<String> {
    let finite = (0..m.chains().len())
        .all(|k| (0..m.p()).all(|j| m.coef(k, j).is_finite() && m.big_m(k, j).is_finite()));
    if !finite {
        return Err(Error::invalid("model has non-finite coefficients"));
    }
    let mut out = String::new();
    match format {
        ModelFormat::Lp => write_lp(m, &mut out),
        ModelFormat::Mps => write_mps(m, &mut out),
    }
    .expect("writing to a String cannot fail");
    Ok(out)
}

fn header(m: &MiloModel) -> String {
    format!(
        "variant={} n={} p={} theta={} gamma={} objective_offset={} objective_scale={}",
        match m.variant() {
            super::MiloVariant::Full => "full",
            super::MiloVariant::Reduced => "reduced",
        },
        m.n(),
        m.p(),
        m.theta(),
        num(m.gamma()),
        num(m.objective_offset()),
        num(m.objective_scale()),
    )
}

fn write_terms(m: &MiloModel, out: &mut String, terms: &[(Var, f64)]) -> std::fmt::Result {
    let mut written = 0;
    for &(v, c) in terms {
        if c == 0.0 {
            continue;
        }
        if written > 0 && written % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let mag = c.abs();
        if mag == 1.0 {
            write!(out, " {sign} {}", m.var_name(v))?;
        } else {
            write!(out, " {sign} {} {}", num(mag), m.var_name(v))?;
        }
        written += 1;
    }
    if written == 0 {
        // LP rows need at least one term.
        if let Some(&(v, _)) = terms.first() {
            write!(out, " 0 {}", m.var_name(v))?;
        }
    }
    Ok(())
}

fn write_lp(m: &MiloModel, out: &mut String) -> std::fmt::Result {
    writeln!(out, "\\ ktsel MILO model")?;
    writeln!(out, "\\ {}", header(m))?;
    writeln!(out, "Maximize")?;
    out.push_str(" obj:");
    let obj: Vec<(Var, f64)> = m.objective_terms().collect();
    write_terms(m, out, &obj)?;
    out.push('\n');
    writeln!(out, "Subject To")?;
    for row in m.constraints() {
        write!(out, " {}:", m.constraint_name(&row))?;
        write_terms(m, out, &row.terms)?;
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {}", num(row.rhs))?;
    }
    writeln!(out, "Bounds")?;
    for k in 0..m.chains().len() {
        for layer in 0..=m.p() {
            writeln!(out, " 0 <= {}", m.var_name(Var::E { chain: k, layer }))?;
        }
    }
    writeln!(out, "Binaries")?;
    for j in 0..m.p() {
        writeln!(out, " {}", m.var_name(Var::Z(j)))?;
    }
    writeln!(out, "End")
}

fn write_mps(m: &MiloModel, out: &mut String) -> std::fmt::Result {
    let rows: Vec<_> = m.constraints().collect();
    let row_names: Vec<String> = rows.iter().map(|r| m.constraint_name(r)).collect();

    // Column-major view of the rows; index 0 of each entry list is the objective.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.num_vars()];
    for (v, c) in m.objective_terms() {
        columns[m.var_index(v)].push((0, c));
    }
    for (r, row) in rows.iter().enumerate() {
        for &(v, c) in &row.terms {
            if c != 0.0 {
                columns[m.var_index(v)].push((r + 1, c));
            }
        }
    }
    let row_name = |r: usize| if r == 0 { "obj" } else { row_names[r - 1].as_str() };

    writeln!(out, "* ktsel MILO model")?;
    writeln!(out, "* {}", header(m))?;
    writeln!(out, "NAME ktsel")?;
    writeln!(out, "OBJSENSE")?;
    writeln!(out, "    MAX")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N obj")?;
    for (row, name) in rows.iter().zip(&row_names) {
        let t = match row.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
        };
        writeln!(out, " {t} {name}")?;
    }
    writeln!(out, "COLUMNS")?;
    writeln!(out, "    MARKER 'MARKER' 'INTORG'")?;
    for j in 0..m.p() {
        let name = m.var_name(Var::Z(j));
        for &(r, c) in &columns[j] {
            writeln!(out, "    {name} {} {}", row_name(r), num(c))?;
        }
    }
    writeln!(out, "    MARKER 'MARKER' 'INTEND'")?;
    for k in 0..m.chains().len() {
        for layer in 0..=m.p() {
            let v = Var::E { chain: k, layer };
            let name = m.var_name(v);
            for &(r, c) in &columns[m.var_index(v)] {
                writeln!(out, "    {name} {} {}", row_name(r), num(c))?;
            }
        }
    }
    writeln!(out, "RHS")?;
    for (row, name) in rows.iter().zip(&row_names) {
        if row.rhs != 0.0 {
            writeln!(out, "    rhs {name} {}", num(row.rhs))?;
        }
    }
    writeln!(out, "BOUNDS")?;
    for j in 0..m.p() {
        writeln!(out, " BV bnd {}", m.var_name(Var::Z(j)))?;
    }
    writeln!(out, "ENDATA")
}
