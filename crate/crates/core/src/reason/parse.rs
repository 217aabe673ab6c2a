//! Recursive descent parser for the inference rule grammar.
//!
//! ```text
//! rule   := "RULE" NAME "DOMAIN" STRING "IF" clause ("AND" clause)*
//!           "THEN" NAME "[" NAME ("&&" NAME)* "]" "CF" cf
//! clause := NAME "is" NAME
//! cf     := NUMBER | NUMBER "%"        "10%" means 0.10
//! ```
//!
//! Parentheses around the antecedent block are accepted and ignored; `#`
//! starts a comment.

use super::{InferenceRule, RuleParseError};
use crate::model::CertaintyFactor;

const KEYWORDS: &[&str] = &["RULE", "DOMAIN", "IF", "AND", "THEN", "CF"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    AmpAmp,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, RuleParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let is_word = |b: u8| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'%' | b'-');
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            b'[' => {
                toks.push((i, Tok::LBracket));
                i += 1;
            }
            b']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    toks.push((i, Tok::AmpAmp));
                    i += 2;
                } else {
                    return Err(RuleParseError::SyntaxError {
                        position: i,
                        expected: "`&&`".into(),
                    });
                }
            }
            b'"' => {
                let start = i;
                i += 1;
                let from = i;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
                if i == bytes.len() {
                    return Err(RuleParseError::SyntaxError {
                        position: start,
                        expected: "closing `\"`".into(),
                    });
                }
                toks.push((start, Tok::Str(text[from..i].to_string())));
                i += 1;
            }
            b if is_word(b) => {
                let start = i;
                while i < bytes.len() && is_word(bytes[i]) {
                    i += 1;
                }
                toks.push((start, Tok::Word(text[start..i].to_string())));
            }
            other => {
                return Err(RuleParseError::SyntaxError {
                    position: i,
                    expected: format!("token, found `{}`", other as char),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err(&self, expected: impl Into<String>) -> RuleParseError {
        let mut expected = expected.into();
        if let Some(tok) = self.peek() {
            expected = format!("{expected}, found {tok:?}");
        }
        RuleParseError::SyntaxError {
            position: self.position(),
            expected,
        }
    }

    fn word(&mut self, expected: &str) -> Result<(usize, String), RuleParseError> {
        match self.toks.get(self.pos) {
            Some((pos, Tok::Word(w))) => {
                let item = (*pos, w.clone());
                self.pos += 1;
                Ok(item)
            }
            _ => Err(self.err(expected)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), RuleParseError> {
        let (pos, w) = self.word(&format!("`{kw}`"))?;
        if w == kw {
            Ok(())
        } else {
            Err(RuleParseError::SyntaxError {
                position: pos,
                expected: format!("`{kw}`, found `{w}`"),
            })
        }
    }

    fn name(&mut self, what: &str) -> Result<String, RuleParseError> {
        let (pos, w) = self.word(what)?;
        let shaped = w
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
            && w.bytes().next().is_some_and(|b| b.is_ascii_alphabetic() || b == b'_');
        if shaped && !KEYWORDS.contains(&w.as_str()) {
            Ok(w)
        } else {
            Err(RuleParseError::SyntaxError {
                position: pos,
                expected: format!("{what}, found `{w}`"),
            })
        }
    }

    fn cf(&mut self) -> Result<CertaintyFactor, RuleParseError> {
        let (pos, w) = self.word("certainty factor")?;
        let bad = || RuleParseError::SyntaxError {
            position: pos,
            expected: format!("number or percentage, found `{w}`"),
        };
        let value = match w.strip_suffix('%') {
            Some(percent) => percent.parse::<f64>().map_err(|_| bad())? / 100.0,
            None => w.parse::<f64>().map_err(|_| bad())?,
        };
        CertaintyFactor::new(value).map_err(|_| RuleParseError::CfOutOfRange(value))
    }

    fn rule(&mut self) -> Result<InferenceRule, RuleParseError> {
        self.keyword("RULE")?;
        let name = self.name("rule name")?;
        self.keyword("DOMAIN")?;
        let domain_tag = match self.toks.get(self.pos) {
            Some((_, Tok::Str(s))) => {
                let s = s.clone();
                self.pos += 1;
                s
            }
            _ => return Err(self.err("quoted domain string")),
        };
        self.keyword("IF")?;

        let parenthesised = self.peek() == Some(&Tok::LParen);
        if parenthesised {
            self.pos += 1;
        }
        let mut antecedents = Vec::new();
        loop {
            let subject = self.name("antecedent subject")?;
            self.keyword("is")?;
            let state = self.name("antecedent state")?;
            antecedents.push((subject, state));
            match self.peek() {
                Some(Tok::Word(w)) if w == "AND" => self.pos += 1,
                _ => break,
            }
        }
        if parenthesised {
            match self.peek() {
                Some(Tok::RParen) => self.pos += 1,
                _ => return Err(self.err("`)`")),
            }
        }

        self.keyword("THEN")?;
        let event = self.name("conclusion event")?;
        match self.peek() {
            Some(Tok::LBracket) => self.pos += 1,
            _ => return Err(self.err("`[`")),
        }
        let mut categories = vec![self.name("category")?];
        while self.peek() == Some(&Tok::AmpAmp) {
            self.pos += 1;
            categories.push(self.name("category")?);
        }
        match self.peek() {
            Some(Tok::RBracket) => self.pos += 1,
            _ => return Err(self.err("`]` or `&&`")),
        }
        self.keyword("CF")?;
        let rule_cf = self.cf()?;
        InferenceRule::new(name, domain_tag, antecedents, event, categories, rule_cf)
    }
}

/// Parses exactly one rule; trailing input is an error.
pub fn parse_rule(text: &str) -> Result<InferenceRule, RuleParseError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let rule = parser.rule()?;
    if parser.peek().is_some() {
        return Err(parser.err("end of rule"));
    }
    Ok(rule)
}

/// Parses a rule file: any number of rules, `#` comments allowed.
pub fn parse_rules(text: &str) -> Result<Vec<InferenceRule>, RuleParseError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        end: text.len(),
    };
    let mut rules = Vec::new();
    while parser.peek().is_some() {
        rules.push(parser.rule()?);
    }
    Ok(rules)
}
