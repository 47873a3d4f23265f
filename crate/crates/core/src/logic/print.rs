use std::fmt;

use super::{Formula, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Binding strength: quantified < or < and < unary.
fn level(f: &Formula) -> u8 {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => 0,
        Formula::Or(_) => 1,
        Formula::And(_) => 2,
        _ => 3,
    }
}

fn write_child(out: &mut fmt::Formatter<'_>, child: &Formula, min_level: u8) -> fmt::Result {
    if level(child) < min_level {
        write!(out, "({child})")
    } else {
        write!(out, "{child}")
    }
}

fn write_joined(out: &mut fmt::Formatter<'_>, parts: &[Formula], sep: &str, min_level: u8) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.write_str(sep)?;
        }
        write_child(out, p, min_level)?;
    }
    Ok(())
}

/// Canonical printer; `parse_formula(&f.to_string()) == f` for every AST the
/// parser can produce.
impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { pred, args } => {
                write!(out, "{pred}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.write_str(", ")?;
                    }
                    write!(out, "{a}")?;
                }
                out.write_str(")")
            }
            Formula::Eq(a, b) => write!(out, "{a} = {b}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Eq(a, b) => write!(out, "{a} != {b}"),
                g => {
                    out.write_str("~")?;
                    write_child(out, g, 3)
                }
            },
            // nested or/and of the same kind needs parentheses to keep the tree shape
            Formula::Or(parts) => write_joined(out, parts, " | ", 2),
            Formula::And(parts) => write_joined(out, parts, " & ", 3),
            Formula::Forall(vs, body) => write!(out, "forall {}: {body}", vs.join(", ")),
            Formula::Exists(vs, body) => write!(out, "exists {}: {body}", vs.join(", ")),
        }
    }
}
