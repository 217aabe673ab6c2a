//! Hand-written recursive descent parser for the CEP rule DSL.
//!
//! ```text
//! rule      := NAME "(" attr ("," attr)* ")" ":=" window "WHERE" cond [emit]
//! attr      := NAME "=" agg
//! agg       := ("AVG"|"MIN"|"MAX"|"SUM"|"COUNT"|"LAST") "(" NAME ".value" ")"
//! window    := "WINDOW" "(" NAME "," duration ["," "MIN_COUNT" "=" INT] ")"
//! cond      := primary (("AND"|"OR") primary)*      left-associative
//! primary   := cmp | "(" cond ")"
//! cmp       := agg OP NUMBER                        OP in { < <= > >= == != }
//! emit      := "EMIT" NAME "is" NAME ["CF" NUMBER]
//! duration  := INT ("s"|"m"|"h"|"d")
//! ```
//!
//! `#` starts a comment running to end of line.

use super::{
    AggFn, AggregateExpr, CepParseError, CepRule, CmpOp, Comparison, Condition, EmitSpec,
    WindowSpec,
};
use crate::model::CertaintyFactor;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    Comma,
    Assign,
    Eq,
    Cmp(CmpOp),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
        }
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'+' | b'-')
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, CepParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
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
            b',' => {
                toks.push((i, Tok::Comma));
                i += 1;
            }
            b':' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Assign));
                    i += 2;
                } else {
                    return Err(CepParseError::SyntaxError {
                        position: i,
                        expected: "`:=`".into(),
                    });
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Eq)));
                    i += 2;
                } else {
                    toks.push((i, Tok::Eq));
                    i += 1;
                }
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Ne)));
                    i += 2;
                } else {
                    return Err(CepParseError::SyntaxError {
                        position: i,
                        expected: "`!=`".into(),
                    });
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Le)));
                    i += 2;
                } else {
                    toks.push((i, Tok::Cmp(CmpOp::Lt)));
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((i, Tok::Cmp(CmpOp::Ge)));
                    i += 2;
                } else {
                    toks.push((i, Tok::Cmp(CmpOp::Gt)));
                    i += 1;
                }
            }
            b if is_word_byte(b) => {
                let start = i;
                while i < bytes.len() && is_word_byte(bytes[i]) {
                    i += 1;
                }
                toks.push((start, Tok::Word(text[start..i].to_string())));
            }
            other => {
                return Err(CepParseError::SyntaxError {
                    position: i,
                    expected: format!("token, found byte `{}`", other as char),
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

    fn err(&self, expected: impl Into<String>) -> CepParseError {
        let mut expected = expected.into();
        if let Some(tok) = self.peek() {
            expected = format!("{expected}, found {}", tok.describe());
        }
        CepParseError::SyntaxError {
            position: self.position(),
            expected,
        }
    }

    fn next(&mut self, expected: &str) -> Result<(usize, Tok), CepParseError> {
        let item = self.toks.get(self.pos).cloned().ok_or_else(|| self.err(expected))?;
        self.pos += 1;
        Ok(item)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), CepParseError> {
        let expected = tok.describe();
        let (_, found) = self.next(&expected)?;
        if found == tok {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(expected))
        }
    }

    fn word(&mut self, expected: &str) -> Result<(usize, String), CepParseError> {
        match self.next(expected)? {
            (pos, Tok::Word(w)) => Ok((pos, w)),
            _ => {
                self.pos -= 1;
                Err(self.err(expected))
            }
        }
    }

    /// A word that is a plain name: no dots (those belong to `stream.value`).
    fn name(&mut self, what: &str) -> Result<String, CepParseError> {
        let (pos, w) = self.word(what)?;
        let valid = w
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
            && w.bytes().next().is_some_and(|b| b.is_ascii_alphabetic() || b == b'_');
        if valid {
            Ok(w)
        } else {
            Err(CepParseError::SyntaxError {
                position: pos,
                expected: format!("{what} (a name), found `{w}`"),
            })
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), CepParseError> {
        let (pos, w) = self.word(&format!("`{kw}`"))?;
        if w == kw {
            Ok(())
        } else {
            Err(CepParseError::SyntaxError {
                position: pos,
                expected: format!("`{kw}`, found `{w}`"),
            })
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, CepParseError> {
        let (pos, w) = self.word(what)?;
        w.parse().map_err(|_| CepParseError::SyntaxError {
            position: pos,
            expected: format!("{what}, found `{w}`"),
        })
    }

    fn agg(&mut self) -> Result<AggregateExpr, CepParseError> {
        let (pos, fn_name) = self.word("aggregate function")?;
        let function = AggFn::from_name(&fn_name).ok_or(CepParseError::UnknownAggregate {
            position: pos,
            name: fn_name,
        })?;
        self.expect(Tok::LParen)?;
        let (pos, target) = self.word("`stream.value`")?;
        let stream = match target.split_once('.') {
            Some((stream, "value")) if !stream.is_empty() && !stream.contains('.') => {
                stream.to_string()
            }
            _ => {
                return Err(CepParseError::SyntaxError {
                    position: pos,
                    expected: format!("`stream.value`, found `{target}`"),
                })
            }
        };
        self.expect(Tok::RParen)?;
        Ok(AggregateExpr { function, stream })
    }

    fn comparison(&mut self) -> Result<Condition, CepParseError> {
        let agg = self.agg()?;
        let op = match self.next("comparison operator")? {
            (_, Tok::Cmp(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.err("comparison operator"));
            }
        };
        let threshold = self.number("number")?;
        Ok(Condition::Cmp(Comparison { agg, op, threshold }))
    }

    fn primary(&mut self) -> Result<Condition, CepParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.condition()?;
            self.expect(Tok::RParen)?;
            Ok(inner)
        } else {
            self.comparison()
        }
    }

    fn condition(&mut self) -> Result<Condition, CepParseError> {
        let mut left = self.primary()?;
        loop {
            let connective = match self.peek() {
                Some(Tok::Word(w)) if w == "AND" || w == "OR" => w.clone(),
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.primary()?;
            left = match connective.as_str() {
                "AND" => Condition::And(Box::new(left), Box::new(right)),
                _ => Condition::Or(Box::new(left), Box::new(right)),
            };
        }
    }

    fn duration(&mut self) -> Result<u64, CepParseError> {
        let (pos, w) = self.word("duration")?;
        let bad = |reason: &str| CepParseError::BadDuration {
            position: pos,
            reason: format!("`{w}` {reason}"),
        };
        let (digits, unit) = w.split_at(w.len().saturating_sub(1));
        let scale = match unit {
            "s" => 1,
            "m" => 60,
            "h" => 3600,
            "d" => 86400,
            _ => return Err(bad("must end in s, m, h or d")),
        };
        let n: u64 = digits
            .parse()
            .map_err(|_| bad("must be an integer followed by a unit"))?;
        if n == 0 {
            return Err(bad("must be positive"));
        }
        Ok(n * scale)
    }

    fn window(&mut self) -> Result<WindowSpec, CepParseError> {
        self.keyword("WINDOW")?;
        self.expect(Tok::LParen)?;
        let stream = self.name("stream name")?;
        self.expect(Tok::Comma)?;
        let width_secs = self.duration()?;
        let mut min_count = 1;
        if self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            self.keyword("MIN_COUNT")?;
            self.expect(Tok::Eq)?;
            let (pos, w) = self.word("positive integer")?;
            min_count = w.parse().map_err(|_| CepParseError::SyntaxError {
                position: pos,
                expected: format!("positive integer, found `{w}`"),
            })?;
            if min_count == 0 {
                return Err(CepParseError::BadMinCount);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(WindowSpec {
            stream,
            width_secs,
            min_count,
        })
    }

    fn emit(&mut self) -> Result<Option<EmitSpec>, CepParseError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == "EMIT" => self.pos += 1,
            _ => return Ok(None),
        }
        let subject = self.name("emit subject")?;
        self.keyword("is")?;
        let state = self.name("emit state")?;
        let mut cf = 1.0;
        if let Some(Tok::Word(w)) = self.peek() {
            if w == "CF" {
                self.pos += 1;
                cf = self.number("certainty factor")?;
            }
        }
        let cf = CertaintyFactor::new(cf).map_err(|_| CepParseError::CfOutOfRange(cf))?;
        Ok(Some(EmitSpec { subject, state, cf }))
    }

    fn rule(&mut self) -> Result<CepRule, CepParseError> {
        let name = self.name("rule name")?;
        self.expect(Tok::LParen)?;
        let mut attributes = Vec::new();
        loop {
            let attr = self.name("attribute name")?;
            self.expect(Tok::Eq)?;
            attributes.push((attr, self.agg()?));
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Assign)?;
        let window = self.window()?;
        self.keyword("WHERE")?;
        let condition = self.condition()?;
        let emit = self.emit()?;
        CepRule::new(name, attributes, window, condition, emit)
    }
}

/// Parses exactly one rule; trailing input is an error.
pub fn parse_cep_rule(text: &str) -> Result<CepRule, CepParseError> {
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
pub fn parse_cep_rules(text: &str) -> Result<Vec<CepRule>, CepParseError> {
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

#[cfg(test)]
mod tests {
    use super::*;

    const HIGH_TEMP: &str = "HighTemp(avg_temp = AVG(Temperature.value)) := \
        WINDOW(Temperature, 1h, MIN_COUNT=4) \
        WHERE AVG(Temperature.value) >= 30.0 \
        EMIT AverageDailyTemp is High CF 1.0";

    #[test]
    fn parses_full_rule() {
        let rule = parse_cep_rule(HIGH_TEMP).unwrap();
        assert_eq!(rule.name(), "HighTemp");
        assert_eq!(rule.window().width_secs, 3600);
        assert_eq!(rule.window().min_count, 4);
        assert_eq!(rule.window().stream, "Temperature");
        assert_eq!(rule.attributes().len(), 1);
        assert_eq!(rule.attributes()[0].0, "avg_temp");
        let emit = rule.emit().unwrap();
        assert_eq!(emit.subject, "AverageDailyTemp");
        assert_eq!(emit.state, "High");
        assert_eq!(emit.cf.value(), 1.0);
        match rule.condition() {
            Condition::Cmp(c) => {
                assert_eq!(c.op, CmpOp::Ge);
                assert_eq!(c.threshold, 30.0);
            }
            other => panic!("unexpected condition {other:?}"),
        }
    }

    #[test]
    fn min_count_defaults_to_one() {
        let rule =
            parse_cep_rule("X(c = COUNT(Rain.value)) := WINDOW(Rain, 60s) WHERE COUNT(Rain.value) >= 1")
                .unwrap();
        assert_eq!(rule.window().min_count, 1);
        assert_eq!(rule.window().width_secs, 60);
    }

    #[test]
    fn unknown_aggregate() {
        let err =
            parse_cep_rule("X(c = MEDIAN(Rain.value)) := WINDOW(Rain, 60s) WHERE COUNT(Rain.value) >= 1")
                .unwrap_err();
        assert!(matches!(err, CepParseError::UnknownAggregate { name, .. } if name == "MEDIAN"));
    }

    #[test]
    fn bad_durations() {
        for text in [
            "X(c = COUNT(R.value)) := WINDOW(R, 60) WHERE COUNT(R.value) >= 1",
            "X(c = COUNT(R.value)) := WINDOW(R, 60x) WHERE COUNT(R.value) >= 1",
            "X(c = COUNT(R.value)) := WINDOW(R, 0s) WHERE COUNT(R.value) >= 1",
        ] {
            assert!(
                matches!(parse_cep_rule(text).unwrap_err(), CepParseError::BadDuration { .. }),
                "{text}"
            );
        }
    }

    #[test]
    fn duration_units() {
        for (suffix, secs) in [("90s", 90), ("5m", 300), ("2h", 7200), ("1d", 86400)] {
            let rule = parse_cep_rule(&format!(
                "X(c = COUNT(R.value)) := WINDOW(R, {suffix}) WHERE COUNT(R.value) >= 1"
            ))
            .unwrap();
            assert_eq!(rule.window().width_secs, secs, "{suffix}");
        }
    }

    #[test]
    fn condition_tree_is_left_associative() {
        let rule = parse_cep_rule(
            "X(c = COUNT(R.value)) := WINDOW(R, 60s) \
             WHERE COUNT(R.value) >= 1 AND MAX(R.value) < 5 OR MIN(R.value) > 0",
        )
        .unwrap();
        // ((a AND b) OR c)
        match rule.condition() {
            Condition::Or(l, _) => assert!(matches!(**l, Condition::And(_, _))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parenthesised_condition() {
        let rule = parse_cep_rule(
            "X(c = COUNT(R.value)) := WINDOW(R, 60s) \
             WHERE COUNT(R.value) >= 1 AND (MAX(R.value) < 5 OR MIN(R.value) > 0)",
        )
        .unwrap();
        match rule.condition() {
            Condition::And(_, r) => assert!(matches!(**r, Condition::Or(_, _))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stream_mismatch_rejected() {
        let err = parse_cep_rule(
            "X(c = COUNT(Rain.value)) := WINDOW(Temperature, 60s) WHERE COUNT(Rain.value) >= 1",
        )
        .unwrap_err();
        assert!(matches!(err, CepParseError::StreamMismatch { .. }));
    }

    #[test]
    fn duplicate_attribute_rejected() {
        let err = parse_cep_rule(
            "X(c = COUNT(R.value), c = SUM(R.value)) := WINDOW(R, 60s) WHERE COUNT(R.value) >= 1",
        )
        .unwrap_err();
        assert_eq!(err, CepParseError::DuplicateAttribute("c".into()));
    }

    #[test]
    fn emit_cf_out_of_range() {
        let err = parse_cep_rule(
            "X(c = COUNT(R.value)) := WINDOW(R, 60s) WHERE COUNT(R.value) >= 1 EMIT A is B CF 1.5",
        )
        .unwrap_err();
        assert_eq!(err, CepParseError::CfOutOfRange(1.5));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_cep_rule("HighTemp := WINDOW(T, 1h) WHERE AVG(T.value) > 1").unwrap_err();
        assert!(matches!(err, CepParseError::SyntaxError { position, .. } if position == 9));
    }

    #[test]
    fn unparse_reparses_equal() {
        let rule = parse_cep_rule(HIGH_TEMP).unwrap();
        assert_eq!(parse_cep_rule(&rule.to_text()).unwrap(), rule);

        let nested = parse_cep_rule(
            "X(c = COUNT(R.value), m = MAX(R.value)) := WINDOW(R, 2m) \
             WHERE (COUNT(R.value) >= 1 OR MAX(R.value) != 0) AND MIN(R.value) <= 9 \
             EMIT R is Busy CF 0.25",
        )
        .unwrap();
        assert_eq!(parse_cep_rule(&nested.to_text()).unwrap(), nested);
    }

    #[test]
    fn rule_file_with_comments() {
        let rules = parse_cep_rules(
            "# rules for the demo\n\
             A(c = COUNT(R.value)) := WINDOW(R, 60s) WHERE COUNT(R.value) >= 1\n\
             # second rule\n\
             B(m = MAX(S.value)) := WINDOW(S, 5m) WHERE MAX(S.value) > 2 EMIT S is High\n",
        )
        .unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[1].emit().unwrap().cf.value(), 1.0);
    }
}
