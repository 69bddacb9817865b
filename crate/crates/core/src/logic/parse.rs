use super::{Formula, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '(' | ')' => {
                chars.next();
                col += 1;
                let tok = if c == '(' { Tok::Open } else { Tok::Close };
                out.push(Token { tok, line: l, col: k });
            }
            _ => {
                let mut w = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    w.push(c);
                    chars.next();
                    col += 1;
                }
                out.push(Token {
                    tok: Tok::Word(w),
                    line: l,
                    col: k,
                });
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    indices: Option<&'a [u32]>,
    end: (usize, usize),
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "and", "or", "not", "implies", "iff", "eq", "E", "X", "P", "f", "cge",
    "card-ge", "true", "false",
];

impl Parser<'_> {
    fn err<T>(&self, at: Option<&Token>, msg: impl Into<String>) -> Result<T> {
        let (line, col) = at.map(|t| (t.line, t.col)).unwrap_or(self.end);
        Err(Error::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err(None, "unexpected end of input"),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        let t = self.next()?;
        match t.tok {
            Tok::Close => Ok(()),
            _ => self.err(Some(&t), "expected `)`"),
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, Token)> {
        let t = self.next()?;
        match &t.tok {
            Tok::Word(w) => Ok((w.clone(), t.clone())),
            _ => self.err(Some(&t), format!("expected {what}")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        let (w, t) = self.word(what)?;
        let ok = w
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
            && w.chars()
                .all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '-');
        if !ok || KEYWORDS.contains(&w.as_str()) {
            return self.err(Some(&t), format!("expected {what}, found `{w}`"));
        }
        Ok(w)
    }

    fn integer(&mut self, what: &str) -> Result<(u32, Token)> {
        let (w, t) = self.word(what)?;
        match w.parse::<u32>() {
            Ok(n) => Ok((n, t)),
            Err(_) => self.err(Some(&t), format!("expected {what}, found `{w}`")),
        }
    }

    fn positive(&mut self, what: &str) -> Result<u32> {
        let (n, t) = self.integer(what)?;
        if n == 0 {
            return self.err(Some(&t), format!("{what} must be positive"));
        }
        Ok(n)
    }

    fn term(&mut self) -> Result<Term> {
        let t = self.next()?;
        match t.tok {
            Tok::Word(_) => {
                self.pos -= 1;
                Ok(Term::Var(self.ident("variable")?))
            }
            Tok::Open => {
                let (w, wt) = self.word("`f`")?;
                if w != "f" {
                    return self.err(Some(&wt), format!("expected term, found `({w}`"));
                }
                let name = self.ident("function name")?;
                let inner = self.term()?;
                self.expect_close()?;
                Ok(Term::Apply(name, Box::new(inner)))
            }
            Tok::Close => self.err(Some(&t), "expected term"),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let t = self.next()?;
        match &t.tok {
            Tok::Word(w) if w == "true" => Ok(Formula::True),
            Tok::Word(w) if w == "false" => Ok(Formula::False),
            Tok::Word(w) => self.err(Some(&t), format!("expected formula, found `{w}`")),
            Tok::Close => self.err(Some(&t), "expected formula, found `)`"),
            Tok::Open => {
                let (op, opt) = self.word("operator")?;
                let f = match op.as_str() {
                    "true" => Formula::True,
                    "false" => Formula::False,
                    "forall" | "exists" => {
                        let mut vars = vec![self.ident("variable")?];
                        while matches!(self.peek(), Some(Token { tok: Tok::Word(_), .. })) {
                            vars.push(self.ident("variable")?);
                        }
                        let mut body = self.formula()?;
                        for v in vars.into_iter().rev() {
                            body = if op == "forall" {
                                Formula::Forall(v, Box::new(body))
                            } else {
                                Formula::Exists(v, Box::new(body))
                            };
                        }
                        body
                    }
                    "and" | "or" => {
                        let mut xs = Vec::new();
                        while !matches!(self.peek(), Some(Token { tok: Tok::Close, .. }) | None) {
                            xs.push(self.formula()?);
                        }
                        if op == "and" {
                            Formula::And(xs)
                        } else {
                            Formula::Or(xs)
                        }
                    }
                    "not" => Formula::not(self.formula()?),
                    "implies" => {
                        let a = self.formula()?;
                        let b = self.formula()?;
                        Formula::implies(a, b)
                    }
                    "iff" => {
                        let a = self.formula()?;
                        let b = self.formula()?;
                        Formula::And(vec![
                            Formula::implies(a.clone(), b.clone()),
                            Formula::implies(b, a),
                        ])
                    }
                    "eq" => Formula::Eq(self.term()?, self.term()?),
                    "E" => Formula::Adj(self.term()?, self.term()?),
                    "X" => {
                        let (i, it) = self.integer("set index")?;
                        if let Some(ix) = self.indices {
                            if !ix.contains(&i) {
                                let _ = it;
                                return Err(Error::UnknownIndex(i));
                            }
                        }
                        Formula::SetPred(i, self.term()?)
                    }
                    "P" => {
                        let p = self.ident("predicate name")?;
                        Formula::Pred(p, self.term()?)
                    }
                    "cge" => {
                        let c = self.ident("counter name")?;
                        let t = self.term()?;
                        Formula::CounterGe(c, t, self.positive("threshold")?)
                    }
                    "card-ge" => {
                        // Either `(card-ge expr m)` or `(card-ge x expr m)`.
                        let explicit = match self.peek() {
                            Some(Token { tok: Tok::Word(w), .. }) => {
                                w != "true" && w != "false"
                            }
                            _ => false,
                        };
                        let var = if explicit {
                            Some(self.ident("variable")?)
                        } else {
                            None
                        };
                        let start = self.peek().cloned();
                        let body = self.formula()?;
                        let min = self.positive("threshold")?;
                        let var = match var {
                            Some(v) => v,
                            None => {
                                let fv = body.free_vars();
                                match fv.len() {
                                    0 => "x".to_string(),
                                    1 => fv.into_iter().next().unwrap(),
                                    _ => {
                                        return self.err(
                                            start.as_ref(),
                                            "cardinality body must have one variable",
                                        )
                                    }
                                }
                            }
                        };
                        if let Err(Error::InvalidFormula(msg)) = body.check_local(&var) {
                            return self.err(start.as_ref(), msg);
                        }
                        Formula::CardGe {
                            var,
                            body: Box::new(body),
                            min,
                        }
                    }
                    "f" => return self.err(Some(&opt), "term used where a formula is expected"),
                    _ => return self.err(Some(&opt), format!("unknown operator `{op}`")),
                };
                self.expect_close()?;
                Ok(f)
            }
        }
    }
}

/// Parses a formula that may have free variables. `indices`, when given, restricts set indices.
pub fn parse_formula(text: &str, indices: Option<&[u32]>) -> Result<Formula> {
    let toks = lex(text);
    let lines = text.split('\n').collect::<Vec<_>>();
    let end = (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1);
    let mut p = Parser {
        toks,
        pos: 0,
        indices,
        end,
    };
    let f = p.formula()?;
    if let Some(t) = p.peek().cloned() {
        return p.err(Some(&t), "trailing input after formula");
    }
    Ok(f)
}

/// Parses a sentence over the index set `indices`.
pub fn parse_sentence(text: &str, indices: &[u32]) -> Result<Formula> {
    let f = parse_formula(text, Some(indices))?;
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(Error::FreeVariable(v));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forall_eq() {
        let f = parse_sentence("(forall x (eq x x))", &[1]).unwrap();
        assert_eq!(
            f,
            Formula::forall("x", Formula::Eq(Term::var("x"), Term::var("x")))
        );
    }

    #[test]
    fn unknown_index() {
        assert_eq!(
            parse_sentence("(forall x (X 7 x))", &[1]),
            Err(Error::UnknownIndex(7))
        );
    }

    #[test]
    fn syntax_error_position() {
        match parse_sentence("(forall x\n  (eq x))", &[1]) {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_variable_rejected() {
        assert_eq!(
            parse_sentence("(X 1 y)", &[1]),
            Err(Error::FreeVariable("y".into()))
        );
    }

    #[test]
    fn distance_two_sentence() {
        let text = "; distance-2 independent set\n\
            (forall x y (implies (and (X 1 x) (X 1 y) (not (eq x y)))\n\
              (and (not (E x y)) (not (exists z (and (E x z) (E y z)))))))";
        let f = parse_sentence(text, &[1]).unwrap();
        match &f {
            Formula::Forall(x, b) => {
                assert_eq!(x, "x");
                assert!(matches!(**b, Formula::Forall(ref y, _) if y == "y"));
            }
            _ => panic!("expected forall"),
        }
    }

    #[test]
    fn card_ge_forms() {
        let a = parse_formula("(card-ge (X 1 y) 2)", None).unwrap();
        let b = parse_formula("(card-ge y (X 1 y) 2)", None).unwrap();
        assert_eq!(a, b);
        assert!(parse_formula("(card-ge (X 1 (f g y)) 2)", None).is_err());
        assert!(parse_formula("(card-ge (X 1 y) 0)", None).is_err());
    }

    #[test]
    fn nested_terms_round_trip() {
        let text = "(exists z (and (eq (f g (f h z)) z) (cge A1 (f g z) 3) (P p z)))";
        let f = parse_formula(text, None).unwrap();
        assert_eq!(f.to_string(), text);
    }
}
