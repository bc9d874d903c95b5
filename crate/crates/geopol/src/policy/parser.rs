//! Policy DSL parser.
//!
//! ```text
//! doc        := (classdecl | providecl | comment)*
//! classdecl  := "class" IRI "=" expr ("subclass-of" IRI ("," IRI)*)?
//! expr       := term ("or" term)*
//! term       := factor ("and" factor)*
//! factor     := "within" IRI | "distance" IRI "<=" NUMBER "km"
//!             | "ref" IRI | "(" expr ")" | IRI
//! providecl  := "provision" ID "of" ID "location" IRI
//!               ("band" NUMBER ".." NUMBER "mhz")?
//!               "effect" ("permit" | "deny") ("obligation" STRING)?
//! ```
//!
//! `#` starts a comment running to end of line. Whitespace, including
//! newlines, only separates tokens. IRIs are angle-bracketed or bare
//! words; a bare non-keyword IRI in factor position abbreviates `ref`.

use std::collections::BTreeSet;

use super::{
    first_structural_error, Band, ClassDef, ClassExpr, Effect, PolicyError, PolicySet, Provision,
};

/// Keywords that a bare word cannot name a class or feature.
const RESERVED: &[&str] = &[
    "and", "band", "class", "deny", "distance", "effect", "km", "location", "mhz", "obligation",
    "of", "or", "permit", "provision", "ref", "subclass-of", "within",
];

fn is_reserved(w: &str) -> bool {
    RESERVED.contains(&w)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Iri(String),
    Str(String),
    Le,
    DotDot,
    Eq,
    Comma,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Iri(i) => format!("`<{i}>`"),
            Tok::Str(_) => "a string".into(),
            Tok::Le => "`<=`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Scanner {
    chars: Vec<char>,
    i: usize,
    line: usize,
    column: usize,
}

impl Scanner {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.i + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> PolicyError {
        PolicyError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

fn is_word_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '<' | '>' | '"' | ',' | '=' | '#')
}

fn lex(text: &str) -> Result<(Vec<Token>, usize, usize), PolicyError> {
    let mut s = Scanner {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = s.peek() {
        let (line, column) = (s.line, s.column);
        if c.is_whitespace() {
            s.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = s.peek() {
                if c == '\n' {
                    break;
                }
                s.bump();
            }
            continue;
        }
        let tok = match c {
            '(' => {
                s.bump();
                Tok::LParen
            }
            ')' => {
                s.bump();
                Tok::RParen
            }
            ',' => {
                s.bump();
                Tok::Comma
            }
            '=' => {
                s.bump();
                Tok::Eq
            }
            '<' if s.peek2() == Some('=') => {
                s.bump();
                s.bump();
                Tok::Le
            }
            '<' => {
                s.bump();
                let mut iri = String::new();
                loop {
                    match s.peek() {
                        Some('>') => {
                            s.bump();
                            break;
                        }
                        Some('\n') | None => {
                            return Err(s.err(line, column, "unterminated IRI, expected `>`"))
                        }
                        Some(c) => {
                            iri.push(c);
                            s.bump();
                        }
                    }
                }
                if iri.is_empty() {
                    return Err(s.err(line, column, "empty IRI"));
                }
                Tok::Iri(iri)
            }
            '"' => {
                s.bump();
                let mut text = String::new();
                loop {
                    match s.peek() {
                        Some('"') => {
                            s.bump();
                            break;
                        }
                        Some('\\') => {
                            s.bump();
                            match s.peek() {
                                Some(c @ ('"' | '\\')) => {
                                    text.push(c);
                                    s.bump();
                                }
                                _ => {
                                    return Err(s.err(
                                        s.line,
                                        s.column,
                                        "unsupported escape in string, only \\\" and \\\\",
                                    ))
                                }
                            }
                        }
                        Some('\n') | None => {
                            return Err(s.err(line, column, "unterminated string, expected `\"`"))
                        }
                        Some(c) => {
                            text.push(c);
                            s.bump();
                        }
                    }
                }
                Tok::Str(text)
            }
            '>' => return Err(s.err(line, column, "unexpected `>`")),
            '.' if s.peek2() == Some('.') => {
                s.bump();
                s.bump();
                Tok::DotDot
            }
            _ => {
                // word run; a single dot stays inside (decimals), a double
                // dot ends the word so band ranges tokenize as NUM .. NUM
                let mut word = String::new();
                while let Some(c) = s.peek() {
                    if is_word_delimiter(c) || (c == '.' && s.peek2() == Some('.')) {
                        break;
                    }
                    word.push(c);
                    s.bump();
                }
                Tok::Word(word)
            }
        };
        out.push(Token { tok, line, column });
    }
    Ok((out, s.line, s.column))
}

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    end_line: usize,
    end_column: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.i)
    }

    fn peek_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Word(found), .. }) if found == w)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> PolicyError {
        let (line, column) = match self.peek() {
            Some(t) => (t.line, t.column),
            None => (self.end_line, self.end_column),
        };
        PolicyError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => format!("found {}", t.tok.describe()),
            None => "found end of document".into(),
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), PolicyError> {
        if self.peek_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{w}`, {}", self.found())))
        }
    }

    fn expect_tok(&mut self, tok: Tok) -> Result<(), PolicyError> {
        if self.peek().map(|t| &t.tok) == Some(&tok) {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!("expected {}, {}", tok.describe(), self.found())))
        }
    }

    /// Angle-bracketed IRI or bare non-keyword word.
    fn iri(&mut self, what: &str) -> Result<String, PolicyError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Iri(iri)) => {
                self.bump();
                Ok(iri)
            }
            Some(Tok::Word(w)) if !is_reserved(&w) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.err_here(format!("expected {what}, {}", self.found()))),
        }
    }

    /// Finite number; returns its position for range diagnostics.
    fn number(&mut self, what: &str) -> Result<(f64, usize, usize), PolicyError> {
        let Some(t) = self.peek() else {
            return Err(self.err_here(format!("expected {what}, found end of document")));
        };
        let (line, column) = (t.line, t.column);
        let Tok::Word(w) = &t.tok else {
            return Err(self.err_here(format!("expected {what}, {}", self.found())));
        };
        let value: f64 = w
            .parse()
            .map_err(|_| self.err_here(format!("expected {what}, found `{w}`")))?;
        if !value.is_finite() {
            return Err(self.err_here(format!("{what} must be finite")));
        }
        self.bump();
        Ok((value, line, column))
    }

    fn classdecl(&mut self) -> Result<ClassDef, PolicyError> {
        self.expect_word("class")?;
        let iri = self.iri("a class IRI")?;
        self.expect_tok(Tok::Eq)?;
        let equivalent_to = self.expr()?;
        let mut declared_superclasses = BTreeSet::new();
        if self.peek_word("subclass-of") {
            self.bump();
            loop {
                declared_superclasses.insert(self.iri("a superclass IRI")?);
                if self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        Ok(ClassDef {
            iri,
            equivalent_to,
            declared_superclasses,
        })
    }

    fn expr(&mut self) -> Result<ClassExpr, PolicyError> {
        let mut terms = vec![self.term()?];
        while self.peek_word("or") {
            self.bump();
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            ClassExpr::Or(terms)
        })
    }

    fn term(&mut self) -> Result<ClassExpr, PolicyError> {
        let mut factors = vec![self.factor()?];
        while self.peek_word("and") {
            self.bump();
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            ClassExpr::And(factors)
        })
    }

    fn factor(&mut self) -> Result<ClassExpr, PolicyError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Word(w)) if w == "within" => {
                self.bump();
                Ok(ClassExpr::Within(self.iri("a feature IRI after `within`")?))
            }
            Some(Tok::Word(w)) if w == "distance" => {
                self.bump();
                let feature = self.iri("a feature IRI after `distance`")?;
                self.expect_tok(Tok::Le)?;
                let (threshold, line, column) = self.number("a distance threshold")?;
                if threshold < 0.0 {
                    return Err(PolicyError::Syntax {
                        line,
                        column,
                        message: "distance threshold must be >= 0".into(),
                    });
                }
                self.expect_word("km")?;
                Ok(ClassExpr::DistanceLE(feature, threshold))
            }
            Some(Tok::Word(w)) if w == "ref" => {
                self.bump();
                Ok(ClassExpr::ClassRef(self.iri("a class IRI after `ref`")?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect_tok(Tok::RParen)?;
                Ok(e)
            }
            // bare IRI abbreviates `ref`
            Some(Tok::Iri(iri)) => {
                self.bump();
                Ok(ClassExpr::ClassRef(iri))
            }
            Some(Tok::Word(w)) if !is_reserved(&w) => {
                self.bump();
                Ok(ClassExpr::ClassRef(w))
            }
            _ => Err(self.err_here(format!(
                "expected `within`, `distance`, `ref`, `(`, or a class IRI, {}",
                self.found()
            ))),
        }
    }

    fn providecl(&mut self) -> Result<Provision, PolicyError> {
        self.expect_word("provision")?;
        let id = self.iri("a provision id")?;
        self.expect_word("of")?;
        let policy_id = self.iri("a policy id")?;
        self.expect_word("location")?;
        let location_class = self.iri("a location class IRI")?;
        let band = if self.peek_word("band") {
            self.bump();
            let (low, ..) = self.number("a band low bound")?;
            self.expect_tok(Tok::DotDot)?;
            let (high, line, column) = self.number("a band high bound")?;
            if high < low {
                return Err(PolicyError::Syntax {
                    line,
                    column,
                    message: format!("band low bound {low} exceeds high bound {high}"),
                });
            }
            self.expect_word("mhz")?;
            Some(Band {
                low_mhz: low,
                high_mhz: high,
            })
        } else {
            None
        };
        self.expect_word("effect")?;
        let effect = match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Word(w)) if w == "permit" => {
                self.bump();
                Effect::Permit
            }
            Some(Tok::Word(w)) if w == "deny" => {
                self.bump();
                Effect::Deny
            }
            _ => return Err(self.err_here(format!("expected `permit` or `deny`, {}", self.found()))),
        };
        let obligation = if self.peek_word("obligation") {
            self.bump();
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Str(text)) => {
                    self.bump();
                    Some(text)
                }
                _ => {
                    return Err(
                        self.err_here(format!("expected a quoted obligation, {}", self.found()))
                    )
                }
            }
        } else {
            None
        };
        Ok(Provision {
            id,
            policy_id,
            location_class,
            band,
            effect,
            obligation,
        })
    }
}

/// Parse a policy document and reject store-independent defects: duplicate
/// declarations, reference cycles, dangling references. Store-dependent
/// checks live in [`super::validate_policy_set`].
pub fn parse_policy_doc(text: &str) -> Result<PolicySet, PolicyError> {
    let (tokens, end_line, end_column) = lex(text)?;
    let mut p = Parser {
        tokens,
        i: 0,
        end_line,
        end_column,
    };
    let mut ps = PolicySet::default();
    let mut provision_keys = BTreeSet::new();
    while let Some(t) = p.peek() {
        match &t.tok {
            Tok::Word(w) if w == "class" => {
                let def = p.classdecl()?;
                if ps.classes.contains_key(&def.iri) {
                    return Err(PolicyError::DuplicateClass(def.iri));
                }
                ps.classes.insert(def.iri.clone(), def);
            }
            Tok::Word(w) if w == "provision" => {
                let provision = p.providecl()?;
                if !provision_keys.insert(provision.key()) {
                    return Err(PolicyError::DuplicateProvision(provision.key()));
                }
                ps.provisions.push(provision);
            }
            _ => return Err(p.err_here(format!("expected `class` or `provision`, {}", p.found()))),
        }
    }
    if let Some(e) = first_structural_error(&ps) {
        return Err(e);
    }
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE_DOC: &str = r#"
# mirrors the two-level class structure of the fixture scenario
class CountryLocation =
    within <http://example.org/states/A1>
    or within <http://example.org/states/B2>
    or within <http://example.org/states/C3>

class US91Loc =
    ref CountryLocation
    and (within <http://example.org/sites/FAIRBANKS>
         or within <http://example.org/sites/CAMPPARKS>)
    subclass-of CountryLocation

provision 2c of US91
    location US91Loc
    band 1761..1780 mhz
    effect permit
    obligation "coordinate before transmitting"
"#;

    #[test]
    fn fixture_doc_parses() {
        let ps = parse_policy_doc(FIXTURE_DOC).unwrap();
        assert_eq!(ps.classes.len(), 2);
        assert_eq!(ps.provisions.len(), 1);

        let us91 = &ps.classes["US91Loc"];
        assert_eq!(
            us91.equivalent_to,
            ClassExpr::And(vec![
                ClassExpr::ClassRef("CountryLocation".into()),
                ClassExpr::Or(vec![
                    ClassExpr::Within("http://example.org/sites/FAIRBANKS".into()),
                    ClassExpr::Within("http://example.org/sites/CAMPPARKS".into()),
                ]),
            ])
        );
        assert_eq!(
            us91.declared_superclasses,
            ["CountryLocation".to_string()].into()
        );

        let p = &ps.provisions[0];
        assert_eq!(p.key(), "US91/2c");
        assert_eq!(
            p.band,
            Some(Band {
                low_mhz: 1761.0,
                high_mhz: 1780.0
            })
        );
        assert_eq!(p.effect, Effect::Permit);
        assert_eq!(
            p.obligation.as_deref(),
            Some("coordinate before transmitting")
        );
    }

    #[test]
    fn self_reference_is_cyclic() {
        assert!(matches!(
            parse_policy_doc("class X = X"),
            Err(PolicyError::CyclicDefinition(path)) if path == "X -> X"
        ));
    }

    #[test]
    fn two_step_cycle_reports_path() {
        let doc = "class A = ref B\nclass B = ref A";
        match parse_policy_doc(doc) {
            Err(PolicyError::CyclicDefinition(path)) => assert_eq!(path, "A -> B -> A"),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn within_without_iri_is_a_syntax_error() {
        match parse_policy_doc("class X = within") {
            Err(PolicyError::Syntax { line: 1, message, .. }) => {
                assert!(message.contains("feature IRI"), "{message}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let ps = parse_policy_doc("class C = within A and within B or within D").unwrap();
        assert_eq!(
            ps.classes["C"].equivalent_to,
            ClassExpr::Or(vec![
                ClassExpr::And(vec![
                    ClassExpr::Within("A".into()),
                    ClassExpr::Within("B".into()),
                ]),
                ClassExpr::Within("D".into()),
            ])
        );
    }

    #[test]
    fn parens_override_precedence() {
        let ps = parse_policy_doc("class C = within A and (within B or within D)").unwrap();
        assert_eq!(
            ps.classes["C"].equivalent_to,
            ClassExpr::And(vec![
                ClassExpr::Within("A".into()),
                ClassExpr::Or(vec![
                    ClassExpr::Within("B".into()),
                    ClassExpr::Within("D".into()),
                ]),
            ])
        );
    }

    #[test]
    fn distance_factor_parses_decimal_thresholds() {
        let ps = parse_policy_doc("class C = distance <ex:F> <= 7.5 km").unwrap();
        assert_eq!(
            ps.classes["C"].equivalent_to,
            ClassExpr::DistanceLE("ex:F".into(), 7.5)
        );
    }

    #[test]
    fn negative_threshold_is_rejected_at_its_position() {
        match parse_policy_doc("class C = distance F <= -3 km") {
            Err(PolicyError::Syntax {
                line: 1,
                column,
                message,
            }) => {
                assert_eq!(column, 25);
                assert!(message.contains(">= 0"), "{message}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_km_unit_is_rejected() {
        assert!(matches!(
            parse_policy_doc("class C = distance F <= 3"),
            Err(PolicyError::Syntax { .. })
        ));
    }

    #[test]
    fn inverted_band_is_rejected() {
        assert!(matches!(
            parse_policy_doc("class L = within A\nprovision p of P location L band 10..5 mhz effect deny"),
            Err(PolicyError::Syntax { line: 2, message, .. }) if message.contains("exceeds")
        ));
    }

    #[test]
    fn bandless_provision_parses() {
        let ps = parse_policy_doc("class L = within A\nprovision p of P location L effect deny")
            .unwrap();
        assert_eq!(ps.provisions[0].band, None);
        assert_eq!(ps.provisions[0].obligation, None);
        assert_eq!(ps.provisions[0].effect, Effect::Deny);
    }

    #[test]
    fn duplicate_declarations_are_rejected() {
        assert!(matches!(
            parse_policy_doc("class X = within A\nclass X = within B"),
            Err(PolicyError::DuplicateClass(name)) if name == "X"
        ));
        let doc = "class L = within A\n\
                   provision p of P location L effect deny\n\
                   provision p of P location L effect permit";
        assert!(matches!(
            parse_policy_doc(doc),
            Err(PolicyError::DuplicateProvision(key)) if key == "P/p"
        ));
    }

    #[test]
    fn dangling_references_are_rejected() {
        assert!(matches!(
            parse_policy_doc("class X = ref Ghost"),
            Err(PolicyError::DanglingClassRef { class, referenced })
                if class == "X" && referenced == "Ghost"
        ));
        assert!(matches!(
            parse_policy_doc("provision p of P location Ghost effect permit"),
            Err(PolicyError::DanglingProvisionClass { provision, class })
                if provision == "P/p" && class == "Ghost"
        ));
        assert!(matches!(
            parse_policy_doc("class X = within A subclass-of Ghost"),
            Err(PolicyError::DanglingClassRef { referenced, .. }) if referenced == "Ghost"
        ));
    }

    #[test]
    fn keywords_cannot_name_classes() {
        assert!(matches!(
            parse_policy_doc("class and = within A"),
            Err(PolicyError::Syntax { .. })
        ));
    }

    #[test]
    fn stray_token_reports_line_and_column() {
        match parse_policy_doc("class X = within A\n  ) class Y = within B") {
            Err(PolicyError::Syntax { line, column, .. }) => {
                assert_eq!((line, column), (2, 3));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unterminated_tokens_are_syntax_errors() {
        for doc in ["class X = within <ex:A", "provision p of P location L effect deny obligation \"oops"] {
            assert!(
                matches!(parse_policy_doc(doc), Err(PolicyError::Syntax { .. })),
                "{doc}"
            );
        }
    }

    #[test]
    fn empty_document_is_an_empty_set() {
        let ps = parse_policy_doc("# comments only\n\n").unwrap();
        assert!(ps.classes.is_empty());
        assert!(ps.provisions.is_empty());
    }

    #[test]
    fn multiple_superclasses_with_commas() {
        let doc = "class A = within X\nclass B = within X\nclass C = within Y subclass-of A, B";
        let ps = parse_policy_doc(doc).unwrap();
        assert_eq!(
            ps.classes["C"].declared_superclasses,
            ["A".to_string(), "B".to_string()].into()
        );
    }
}
