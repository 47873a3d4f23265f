//! Facts files: one ground atom per line (`pred(c1, c2)`, optional trailing
//! `.`), `#` comments, and `@constants a, b, ...` directives for isolated
//! constants.

use std::collections::BTreeSet;

use super::{GlobalExample, GroundAtom};
use crate::error::{Error, Result};
use crate::logic::parse::{lex, Parser, Tok};
use crate::logic::{Term, Vocabulary};

const DIRECTIVE: &str = "@constants";

fn is_constant_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn parse(text: &str) -> Result<GlobalExample> {
    let mut ex = GlobalExample::default();
    let mut vocab = Vocabulary::new();
    let mut declared = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let line = content.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(DIRECTIVE) {
            let offset = indent + DIRECTIVE.len();
            let mut column = offset + 1;
            for item in rest.split(',') {
                let name = item.trim();
                let lead = item.len() - item.trim_start().len();
                if !is_constant_name(name) {
                    return Err(Error::syntax(line_no, column + lead, format!("invalid constant name `{name}`")));
                }
                if !declared.insert(name.to_string()) {
                    return Err(Error::DuplicateConstant(name.to_string()));
                }
                ex.intern_constant(name);
                column += item.len() + 1;
            }
            continue;
        }
        let toks = lex(line).map_err(|e| e.at_line(line_no, indent))?;
        let mut p = Parser::new(toks);
        let pred = match p.next().tok {
            Tok::Lower(name) if *p.peek() == Tok::LParen => name,
            _ => {
                return Err(Error::syntax(line_no, indent + 1, "expected a ground atom `pred(c1, ...)`"));
            }
        };
        p.expect(Tok::LParen).map_err(|e| e.at_line(line_no, indent))?;
        let args = p.term_list().map_err(|e| e.at_line(line_no, indent))?;
        p.expect(Tok::RParen).map_err(|e| e.at_line(line_no, indent))?;
        if *p.peek() == Tok::Dot {
            p.next();
        }
        if *p.peek() != Tok::Eof {
            return Err(p.error_here("unexpected input after atom").at_line(line_no, indent));
        }
        let mut ids = Vec::with_capacity(args.len());
        for t in &args {
            match t {
                Term::Const(c) => ids.push(ex.intern_constant(c)),
                Term::Var(v) => {
                    return Err(Error::syntax(line_no, indent + 1, format!("facts must be ground; found variable `{v}`")));
                }
            }
        }
        vocab.add(&pred, ids.len())?;
        ex.insert(GroundAtom::new(pred, ids));
    }
    Ok(ex)
}

pub(crate) fn print(ex: &GlobalExample) -> String {
    let mut out = String::new();
    if !ex.is_empty() {
        out.push_str(DIRECTIVE);
        out.push(' ');
        out.push_str(&ex.constants().join(", "));
        out.push('\n');
    }
    for a in ex.atoms() {
        let args: Vec<&str> = a.args.iter().map(|&c| ex.constants()[c].as_str()).collect();
        out.push_str(&format!("{}({})\n", a.pred, args.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_directives_and_dots() {
        let ex = parse("# friends\n@constants zed\nfr(alice, bob).\n  sm(alice) # smokes\n\n").unwrap();
        assert_eq!(ex.constants(), ["zed", "alice", "bob"]);
        assert_eq!(ex.atoms().len(), 2);
        assert!(ex.contains_named("fr", &["alice", "bob"]));
    }

    #[test]
    fn errors_carry_file_positions() {
        match parse("sm(alice)\nfr(alice, bob") {
            Err(Error::Syntax { line: 2, column: 14, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("sm(alice)\n  sm(X)") {
            Err(Error::Syntax { line: 2, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("r(a)\nr(a, b)"), Err(Error::Arity { .. })));
        assert!(matches!(parse("@constants a, Bad"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse("@constants a, a"), Err(Error::DuplicateConstant(_))));
        assert!(parse("r(a) r(b)").is_err());
    }

    #[test]
    fn print_parse_roundtrip() {
        let text = "@constants q\ne(a, b)\ne(b, c)\nr(q)\n";
        let ex = parse(text).unwrap();
        let again = parse(&print(&ex)).unwrap();
        assert_eq!(ex, again);
    }
}
