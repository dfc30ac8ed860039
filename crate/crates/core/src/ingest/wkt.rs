//! Well-known-text reader for the 2-D subset: POINT, LINESTRING, POLYGON, MULTIPOLYGON.

use std::fmt::Write;

use super::IngestError;
use crate::geometry::{Coord, Geometry, Polygon, Polyline, Ring};

/// Parses one WKT geometry. Keywords are case-insensitive; whitespace is free.
pub fn parse_wkt(text: &str) -> Result<Geometry, IngestError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let g = p.geometry()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing characters after geometry"));
    }
    Ok(g)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> IngestError {
        IngestError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, ch: u8) -> Result<(), IngestError> {
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!(
                "expected `{}`, found `{}`",
                ch as char,
                c.escape_ascii()
            ))),
            None => Err(self.error(format!("expected `{}`, found end of input", ch as char))),
        }
    }

    fn keyword(&mut self) -> Result<String, IngestError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected geometry keyword"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase())
    }

    fn geometry(&mut self) -> Result<Geometry, IngestError> {
        let start = self.pos;
        let kw = self.keyword()?;
        if let Some(b'A'..=b'Z' | b'a'..=b'z') = self.peek() {
            let modifier = self.keyword()?;
            return Err(IngestError::Unsupported(format!("{kw} {modifier}")));
        }
        match kw.as_str() {
            "POINT" => {
                self.expect(b'(')?;
                let c = self.coord()?;
                self.expect(b')')?;
                Ok(Geometry::point(c)?)
            }
            "LINESTRING" => {
                let coords = self.coord_list()?;
                Ok(Geometry::Polyline(Polyline::new(coords)?))
            }
            "POLYGON" => Ok(Geometry::Polygon(self.polygon()?)),
            "MULTIPOLYGON" => {
                self.expect(b'(')?;
                let mut polys = vec![self.polygon()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    polys.push(self.polygon()?);
                }
                self.expect(b')')?;
                Ok(Geometry::multi_polygon(polys)?)
            }
            _ => {
                self.pos = start;
                Err(IngestError::Unsupported(kw))
            }
        }
    }

    fn polygon(&mut self) -> Result<Polygon, IngestError> {
        self.expect(b'(')?;
        let exterior = Ring::new(self.coord_list()?)?;
        let mut holes = Vec::new();
        while self.peek() == Some(b',') {
            self.pos += 1;
            holes.push(Ring::new(self.coord_list()?)?);
        }
        self.expect(b')')?;
        Ok(Polygon::new(exterior, holes)?)
    }

    fn coord_list(&mut self) -> Result<Vec<Coord>, IngestError> {
        self.expect(b'(')?;
        let mut out = vec![self.coord()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.coord()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn coord(&mut self) -> Result<Coord, IngestError> {
        let x = self.number()?;
        let y = self.number()?;
        if let Some(c) = self.peek() {
            if c != b',' && c != b')' {
                return Err(self.error("only 2-D coordinates are supported"));
            }
        }
        Ok(Coord::new(x, y))
    }

    fn number(&mut self) -> Result<f64, IngestError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && matches!(self.src[self.pos], b'0'..=b'9' | b'+' | b'-' | b'.' | b'e' | b'E')
        {
            self.pos += 1;
        }
        let token = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => {
                self.pos = start;
                Err(self.error("number out of range"))
            }
            Err(_) => {
                self.pos = start;
                Err(self.error("expected number"))
            }
        }
    }
}

/// Writes WKT using shortest round-trip float formatting.
pub fn to_wkt(g: &Geometry) -> String {
    fn coords(out: &mut String, vs: &[Coord], close: bool) {
        out.push('(');
        let first = vs.first().copied();
        for (i, v) in vs.iter().chain(first.filter(|_| close).iter()).enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{:?} {:?}", v.x, v.y);
        }
        out.push(')');
    }
    fn polygon(out: &mut String, p: &Polygon) {
        out.push('(');
        for (i, r) in p.rings().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            coords(out, r.vertices(), true);
        }
        out.push(')');
    }
    let mut out = String::new();
    match g {
        Geometry::Point(c) => {
            let _ = write!(out, "POINT ({:?} {:?})", c.x, c.y);
        }
        Geometry::Polyline(l) => {
            out.push_str("LINESTRING ");
            coords(&mut out, l.vertices(), false);
        }
        Geometry::Polygon(p) => {
            out.push_str("POLYGON ");
            polygon(&mut out, p);
        }
        Geometry::MultiPolygon(ps) => {
            out.push_str("MULTIPOLYGON (");
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                polygon(&mut out, p);
            }
            out.push(')');
        }
    }
    out
}
