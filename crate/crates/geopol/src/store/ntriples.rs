//! N-Triples subset: `<s> <p> <o> .` and `<s> <p> "lit"` with optional
//! `^^<datatype>`. No blank nodes, no language tags, `#` comment lines.

use super::StoreError;

/// Vocabulary the store emits. Everything else round-trips as opaque
/// annotation triples.
pub mod vocab {
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";
    pub const GEO_FEATURE: &str = "http://www.opengis.net/ont/geosparql#Feature";
    pub const GEO_HAS_GEOMETRY: &str = "http://www.opengis.net/ont/geosparql#hasGeometry";
    pub const GEO_AS_WKT: &str = "http://www.opengis.net/ont/geosparql#asWKT";
    pub const GEO_WKT_LITERAL: &str = "http://www.opengis.net/ont/geosparql#wktLiteral";
    pub const PROV_LOCATION: &str = "http://www.w3.org/ns/prov#Location";
    pub const PROV_WAS_DERIVED_FROM: &str = "http://www.w3.org/ns/prov#wasDerivedFrom";
    pub const PROV_WAS_GENERATED_BY: &str = "http://www.w3.org/ns/prov#wasGeneratedBy";
    pub const PROV_STARTED_AT_TIME: &str = "http://www.w3.org/ns/prov#startedAtTime";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Object {
    Iri(String),
    Literal {
        lexical: String,
        /// None for plain literals.
        datatype: Option<String>,
    },
}

impl Object {
    pub fn iri(v: impl Into<String>) -> Object {
        Object::Iri(v.into())
    }

    pub fn plain(v: impl Into<String>) -> Object {
        Object::Literal {
            lexical: v.into(),
            datatype: None,
        }
    }

    pub fn typed(v: impl Into<String>, datatype: impl Into<String>) -> Object {
        Object::Literal {
            lexical: v.into(),
            datatype: Some(datatype.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Object) -> Triple {
        Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object,
        }
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn render_object(o: &Object) -> String {
    match o {
        Object::Iri(iri) => format!("<{iri}>"),
        Object::Literal {
            lexical,
            datatype: None,
        } => format!("\"{}\"", escape_literal(lexical)),
        Object::Literal {
            lexical,
            datatype: Some(dt),
        } => format!("\"{}\"^^<{dt}>", escape_literal(lexical)),
    }
}

#[cfg(test)]
pub(crate) fn render_triple(t: &Triple) -> String {
    format!(
        "<{}> <{}> {} .",
        t.subject,
        t.predicate,
        render_object(&t.object)
    )
}

/// Characters that may not appear in an IRI reference.
pub(crate) fn iri_char_error(iri: &str) -> Option<String> {
    if iri.is_empty() {
        return Some("empty IRI".into());
    }
    for c in iri.chars() {
        if c <= ' ' || c == '\u{7f}' || "<>\"{}|^`\\".contains(c) {
            return Some(format!("character {c:?} not allowed in an IRI"));
        }
    }
    None
}

struct LineParser<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> LineParser<'a> {
    fn error(&self, message: impl Into<String>) -> StoreError {
        StoreError::Syntax {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.line.len() - trimmed.len();
    }

    fn iri(&mut self) -> Result<String, StoreError> {
        self.skip_ws();
        if !self.rest().starts_with('<') {
            return Err(self.error("expected '<'"));
        }
        self.pos += 1;
        let end = self
            .rest()
            .find('>')
            .ok_or_else(|| self.error("unterminated IRI"))?;
        let iri = &self.rest()[..end];
        if let Some(why) = iri_char_error(iri) {
            return Err(self.error(why));
        }
        let iri = iri.to_string();
        self.pos += end + 1;
        Ok(iri)
    }

    fn literal(&mut self) -> Result<Object, StoreError> {
        // opening quote already consumed by the caller's check
        self.pos += 1;
        let mut lexical = String::new();
        let mut chars = self.rest().char_indices();
        let close = loop {
            let (i, c) = chars
                .next()
                .ok_or_else(|| self.error("unterminated literal"))?;
            match c {
                '"' => break i + 1,
                '\\' => {
                    let (_, esc) = chars
                        .next()
                        .ok_or_else(|| self.error("dangling escape"))?;
                    match esc {
                        '"' => lexical.push('"'),
                        '\\' => lexical.push('\\'),
                        'n' => lexical.push('\n'),
                        'r' => lexical.push('\r'),
                        't' => lexical.push('\t'),
                        'u' | 'U' => {
                            let len = if esc == 'u' { 4 } else { 8 };
                            let mut hex = String::new();
                            for _ in 0..len {
                                let (_, h) = chars
                                    .next()
                                    .ok_or_else(|| self.error("truncated \\u escape"))?;
                                hex.push(h);
                            }
                            let code = u32::from_str_radix(&hex, 16)
                                .map_err(|_| self.error("bad \\u escape"))?;
                            lexical.push(
                                char::from_u32(code)
                                    .ok_or_else(|| self.error("bad \\u code point"))?,
                            );
                        }
                        other => return Err(self.error(format!("unknown escape \\{other}"))),
                    }
                }
                c => lexical.push(c),
            }
        };
        self.pos += close;
        if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt = self.iri()?;
            return Ok(Object::typed(lexical, dt));
        }
        if self.rest().starts_with('@') {
            return Err(self.error("language tags are not supported"));
        }
        Ok(Object::plain(lexical))
    }

    fn object(&mut self) -> Result<Object, StoreError> {
        self.skip_ws();
        match self.rest().chars().next() {
            Some('<') => Ok(Object::Iri(self.iri()?)),
            Some('"') => self.literal(),
            Some('_') => Err(self.error("blank nodes are not supported")),
            _ => Err(self.error("expected an IRI or literal object")),
        }
    }
}

/// Parse one line. `Ok(None)` for blank and comment lines.
pub(crate) fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, StoreError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut p = LineParser {
        line: trimmed,
        pos: 0,
        line_no,
    };
    let subject = p.iri()?;
    let predicate = p.iri()?;
    let object = p.object()?;
    p.skip_ws();
    if p.rest() != "." {
        return Err(p.error("expected terminal ' .'"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}
