//! WKT reader and writer for the POINT / POLYGON / MULTIPOLYGON subset.
//!
//! Parsing accepts keywords case-insensitively and arbitrary whitespace
//! between tokens. Emission is canonical: uppercase keywords, a single
//! space between coordinates, no space after commas, and shortest
//! round-trippable decimal notation.

use std::fmt::Write as _;

use super::{Geometry, GeometryError, Point, Polygon, Ring};

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> GeometryError {
        GeometryError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn expect(&mut self, ch: char) -> Result<(), GeometryError> {
        self.skip_ws();
        if self.rest().starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected {ch:?}")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn keyword(&mut self) -> Result<String, GeometryError> {
        self.skip_ws();
        let word: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .collect();
        if word.is_empty() {
            return Err(self.error("expected a geometry keyword"));
        }
        self.pos += word.len();
        Ok(word.to_ascii_uppercase())
    }

    fn number(&mut self) -> Result<f64, GeometryError> {
        self.skip_ws();
        let raw: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
            .collect();
        if raw.is_empty() {
            return Err(self.error("expected a number"));
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| self.error(format!("invalid number {raw:?}")))?;
        self.pos += raw.len();
        Ok(value)
    }

    fn point(&mut self) -> Result<Point, GeometryError> {
        let lon = self.number()?;
        let lat = self.number()?;
        Point::new(lon, lat)
    }

    /// `( x y , x y , ... )`
    fn ring(&mut self) -> Result<Ring, GeometryError> {
        self.expect('(')?;
        let mut vertices = vec![self.point()?];
        while self.peek() == Some(',') {
            self.expect(',')?;
            vertices.push(self.point()?);
        }
        self.expect(')')?;
        Ring::new(vertices)
    }

    /// `( ring , ring , ... )`, first ring outer, the rest holes.
    fn polygon_body(&mut self) -> Result<Polygon, GeometryError> {
        self.expect('(')?;
        let outer = self.ring()?;
        let mut holes = Vec::new();
        while self.peek() == Some(',') {
            self.expect(',')?;
            holes.push(self.ring()?);
        }
        self.expect(')')?;
        Polygon::new(outer, holes)
    }

    fn eof(&mut self) -> Result<(), GeometryError> {
        self.skip_ws();
        if self.pos == self.text.len() {
            Ok(())
        } else {
            Err(self.error("trailing characters after geometry"))
        }
    }
}

/// Parse a WKT string holding a POINT, POLYGON, or MULTIPOLYGON.
pub fn parse_wkt(text: &str) -> Result<Geometry, GeometryError> {
    let mut p = Parser { text, pos: 0 };
    let keyword = p.keyword()?;
    let geometry = match keyword.as_str() {
        "POINT" => {
            p.expect('(')?;
            let point = p.point()?;
            p.expect(')')?;
            Geometry::Point(point)
        }
        "POLYGON" => Geometry::Polygon(p.polygon_body()?),
        "MULTIPOLYGON" => {
            p.expect('(')?;
            let mut polygons = vec![p.polygon_body()?];
            while p.peek() == Some(',') {
                p.expect(',')?;
                polygons.push(p.polygon_body()?);
            }
            p.expect(')')?;
            Geometry::multi_polygon(polygons)?
        }
        other => return Err(GeometryError::UnsupportedWktType(other.to_string())),
    };
    p.eof()?;
    Ok(geometry)
}

fn write_coord(out: &mut String, v: f64) {
    // f64 Display prints the shortest decimal string that parses back to
    // the same value and never uses scientific notation
    write!(out, "{v}").expect("writing to a String cannot fail");
}

fn write_ring(out: &mut String, ring: &Ring) {
    out.push('(');
    for (i, v) in ring.vertices().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_coord(out, v.lon);
        out.push(' ');
        write_coord(out, v.lat);
    }
    out.push(')');
}

fn write_polygon_body(out: &mut String, poly: &Polygon) {
    out.push('(');
    for (i, ring) in poly.rings().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_ring(out, ring);
    }
    out.push(')');
}

/// Serialize a geometry to canonical WKT.
pub fn emit_wkt(g: &Geometry) -> String {
    let mut out = String::new();
    match g {
        Geometry::Point(p) => {
            out.push_str("POINT(");
            write_coord(&mut out, p.lon);
            out.push(' ');
            write_coord(&mut out, p.lat);
            out.push(')');
        }
        Geometry::Polygon(poly) => {
            out.push_str("POLYGON");
            write_polygon_body(&mut out, poly);
        }
        Geometry::MultiPolygon(polys) => {
            out.push_str("MULTIPOLYGON(");
            for (i, poly) in polys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_polygon_body(&mut out, poly);
            }
            out.push(')');
        }
    }
    out
}
