use std::collections::BTreeSet;

use super::{is_atom_name, AspError, Atom, ChoiceRule, IntegrityConstraint, Program};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    If,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::If => "`:-`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> AspError {
    AspError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, AspError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let (start_line, start_col) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };

        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }

        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Ident(word)
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Number(digits)
        } else {
            bump(&mut chars);
            match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '-' => Tok::Minus,
                ':' if chars.peek() == Some(&'-') => {
                    bump(&mut chars);
                    Tok::If
                }
                other => {
                    return Err(syntax(
                        start_line,
                        start_col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned, AspError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(
                t.line,
                t.column,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            ))
        }
    }

    fn atom(&mut self) -> Result<Atom, AspError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(name) if name == "not" => Err(AspError::UnsupportedFragment(format!(
                "negation as failure at {}:{}",
                t.line, t.column
            ))),
            Tok::Ident(name) if is_atom_name(&name) => Ok(Atom::new(&name)?),
            Tok::Ident(name) => Err(AspError::UnsupportedFragment(format!(
                "variable `{name}` at {}:{}",
                t.line, t.column
            ))),
            Tok::Minus => Err(AspError::UnsupportedFragment(format!(
                "classical negation at {}:{}",
                t.line, t.column
            ))),
            other => Err(syntax(
                t.line,
                t.column,
                format!("expected atom, found {}", other.describe()),
            )),
        }
    }

    fn body(&mut self) -> Result<BTreeSet<Atom>, AspError> {
        let mut body = BTreeSet::from([self.atom()?]);
        while self.peek().tok == Tok::Comma {
            self.next();
            body.insert(self.atom()?);
        }
        Ok(body)
    }

    fn bound(&mut self) -> Option<String> {
        match &self.peek().tok {
            Tok::Number(n) => {
                let n = n.clone();
                self.next();
                Some(n)
            }
            _ => None,
        }
    }

    fn choice(&mut self) -> Result<ChoiceRule, AspError> {
        let start = self.peek().clone();
        let lower = self.bound();
        self.expect(Tok::LBrace)?;
        let mut heads = BTreeSet::from([self.atom()?]);
        while matches!(self.peek().tok, Tok::Semi | Tok::Comma) {
            self.next();
            heads.insert(self.atom()?);
        }
        self.expect(Tok::RBrace)?;
        let upper = self.bound();

        if lower.as_deref() != Some("1") || upper.as_deref() != Some("1") {
            return Err(AspError::UnsupportedFragment(format!(
                "cardinality bounds `{}{{..}}{}` at {}:{} (only 1..1 is supported)",
                lower.unwrap_or_default(),
                upper.unwrap_or_default(),
                start.line,
                start.column
            )));
        }

        if self.peek().tok == Tok::Dot {
            return Err(AspError::UnsupportedFragment(format!(
                "choice rule without body at {}:{}",
                start.line, start.column
            )));
        }
        self.expect(Tok::If)?;
        let body = self.body()?;
        self.expect(Tok::Dot)?;
        Ok(ChoiceRule::new(heads, body).expect("heads and body are non-empty"))
    }

    fn program(&mut self) -> Result<Program, AspError> {
        let mut program = Program::new();
        loop {
            let head = self.peek().clone();
            match &head.tok {
                Tok::Eof => return Ok(program),
                Tok::If => {
                    self.next();
                    let body = self.body()?;
                    self.expect(Tok::Dot)?;
                    program
                        .add_constraint(IntegrityConstraint::new(body).expect("body is non-empty"));
                }
                Tok::Number(_) | Tok::LBrace => {
                    let rule = self.choice()?;
                    if program.rule_for_body(rule.body()).is_some() {
                        return Err(AspError::UnsupportedFragment(format!(
                            "second choice rule with the same body at {}:{}",
                            head.line, head.column
                        )));
                    }
                    program.add_choice_rule(rule);
                }
                Tok::Ident(_) | Tok::Minus => {
                    let atom = self.atom()?;
                    if *self.peek_at(0) == Tok::If {
                        return Err(AspError::UnsupportedFragment(format!(
                            "normal rule with head `{atom}` at {}:{}",
                            head.line, head.column
                        )));
                    }
                    self.expect(Tok::Dot)?;
                    program.add_fact(atom);
                }
                other => {
                    return Err(syntax(
                        head.line,
                        head.column,
                        format!("expected statement, found {}", other.describe()),
                    ))
                }
            }
        }
    }
}

/// Parses program text. `%` starts a comment running to the end of the line.
/// Choice heads may be separated by `;` or `,`.
pub fn parse_program(text: &str) -> Result<Program, AspError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(names: &[&str]) -> BTreeSet<Atom> {
        names.iter().map(|n| Atom::new(n).unwrap()).collect()
    }

    #[test]
    fn three_head_rule_with_either_separator() {
        for text in ["1{ s1; s2; s3 }1 :- a, s.", "1{ s1, s2, s3 }1 :- a, s."] {
            let p = parse_program(text).unwrap();
            assert_eq!(p.choice_rules().len(), 1);
            let rule = &p.choice_rules()[0];
            assert_eq!(rule.heads(), &atoms(&["s1", "s2", "s3"]));
            assert_eq!(rule.body(), &atoms(&["a", "s"]));
            assert!(p.facts().is_empty());
            assert_eq!(p.render(), "1{ s1; s2; s3 }1 :- a, s.\n");
        }
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_program("").unwrap(), Program::new());
        assert_eq!(
            parse_program("  % only a comment\n").unwrap(),
            Program::new()
        );
    }

    #[test]
    fn fact_and_constraint() {
        let p = parse_program("a. :- a, b.").unwrap();
        assert_eq!(p.facts(), &atoms(&["a"]));
        assert_eq!(p.constraints().len(), 1);
        assert_eq!(p.constraints()[0].body(), &atoms(&["a", "b"]));
    }

    #[test]
    fn comments_and_layout() {
        let text = "% state program\ns_0_0. % the state\n1{s_0_1}1:-a_up,s_0_0.\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.render(), "s_0_0.\n1{ s_0_1 }1 :- a_up, s_0_0.\n");
    }

    #[test]
    fn rejects_other_bounds() {
        for text in [
            "0{ a }1 :- b.",
            "1{ a }2 :- b.",
            "{ a } :- b.",
            "{ a }1 :- b.",
        ] {
            match parse_program(text) {
                Err(AspError::UnsupportedFragment(_)) => {}
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_negation() {
        for text in [":- not a.", "-a.", "1{ a }1 :- not b.", "1{ a }1 :- -b."] {
            match parse_program(text) {
                Err(AspError::UnsupportedFragment(msg)) => assert!(msg.contains("negation")),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_fragment_outsiders() {
        for text in ["a :- b.", "1{ a }1.", "X.", "1{ a }1 :- b. 1{ c }1 :- b."] {
            assert!(
                matches!(parse_program(text), Err(AspError::UnsupportedFragment(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_program("a.\nb") {
            Err(AspError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        match parse_program("a.\n  :- .") {
            Err(AspError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 6)),
            other => panic!("{other:?}"),
        }
        match parse_program("a ? b.") {
            Err(AspError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_heads_collapse() {
        let p = parse_program("1{ a; a; b }1 :- c.").unwrap();
        assert_eq!(p.choice_rules()[0].heads(), &atoms(&["a", "b"]));
    }
}
