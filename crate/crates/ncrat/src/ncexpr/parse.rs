//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    := term { ("+"|"-") term } ;
//! term    := factor { "*" factor } ;
//! factor  := ["-"] atom ;
//! atom    := number | "i" | var | "inv" "(" expr ")" | "star" "(" expr ")" | "(" expr ")" ;
//! var     := "x" digits ;   number := decimal literal ;
//! ```
//!
//! `i` is legal only over ℂ. Whitespace is insignificant. There is no
//! implicit multiplication.

use num_complex::Complex64;

use super::{constant, difference, inverse, negate, product, star, sum, var, ExprRef, RationalExpr};
use crate::linalg::Field;
use crate::{Error, Result};

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    nvars: usize,
    field: Field,
}

/// Parse `text` as a rational expression in variables `x1..x{g}` over the
/// given field.
pub fn parse(text: &str, g: usize, field: Field) -> Result<RationalExpr> {
    let mut p = Parser {
        input: text.as_bytes(),
        pos: 0,
        nvars: g,
        field,
    };
    p.skip_ws();
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(p.error("unexpected trailing input"));
    }
    RationalExpr::new(root, g, field)
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: u8) -> Result<()> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", ch as char)))
        }
    }

    fn expr(&mut self) -> Result<ExprRef> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = sum(acc, rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = difference(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ExprRef> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            let rhs = self.factor()?;
            acc = product(acc, rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ExprRef> {
        if self.eat(b'-') {
            let a = self.atom()?;
            Ok(negate(a))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<ExprRef> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<ExprRef> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2*e`—which will then fail)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(&format!("invalid number literal `{text}`")))?;
        self.skip_ws();
        Ok(constant(Complex64::new(value, 0.0)))
    }

    fn ident(&mut self) -> Result<ExprRef> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        match word {
            "i" => {
                if self.field != Field::Complex {
                    self.pos = start;
                    return Err(self.error("imaginary unit `i` requires the complex field"));
                }
                self.skip_ws();
                Ok(constant(Complex64::new(0.0, 1.0)))
            }
            "x" => {
                let digits_start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                if self.pos == digits_start {
                    return Err(self.error("expected variable index after `x`"));
                }
                let text = std::str::from_utf8(&self.input[digits_start..self.pos]).unwrap();
                let index: usize = text
                    .parse()
                    .map_err(|_| self.error(&format!("invalid variable index `{text}`")))?;
                if index == 0 || index > self.nvars {
                    return Err(Error::VarOutOfRange {
                        index,
                        nvars: self.nvars,
                    });
                }
                self.skip_ws();
                Ok(var(index))
            }
            "inv" => {
                self.skip_ws();
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inverse(inner))
            }
            "star" => {
                self.skip_ws();
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(star(&inner))
            }
            other => {
                self.pos = start;
                Err(self.error(&format!("unknown identifier `{other}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{constant_re, format_expr, inverse, product, sum, var, Expr};
    use super::*;

    #[test]
    fn parses_nested_inverse_example() {
        // (1 + x2^{-1} x1)^{-1} + 1
        let e = parse("inv(1 + inv(x2)*x1) + 1", 2, Field::Real).unwrap();
        let expected = sum(
            inverse(sum(constant_re(1.0), product(inverse(var(2)), var(1)))),
            constant_re(1.0),
        );
        assert_eq!(e.root, expected);
    }

    #[test]
    fn parses_zero_and_degenerate_inverse() {
        let z = parse("0", 1, Field::Real).unwrap();
        assert!(matches!(&*z.root, Expr::Const(c) if c.re == 0.0 && c.im == 0.0));
        let inv0 = parse("inv(0)", 1, Field::Real).unwrap();
        assert!(matches!(&*inv0.root, Expr::Inverse(_)));
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(matches!(
            parse("x3", 2, Field::Real),
            Err(Error::VarOutOfRange { index: 3, nvars: 2 })
        ));
        assert!(parse("x0", 2, Field::Real).is_err());
    }

    #[test]
    fn rejects_imaginary_unit_over_reals() {
        assert!(parse("i", 1, Field::Real).is_err());
        assert!(parse("i", 1, Field::Complex).is_ok());
    }

    #[test]
    fn reports_error_positions() {
        match parse("x1 + ", 1, Field::Real) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("x1 x2", 2, Field::Real).is_err(), "no implicit multiplication");
    }

    #[test]
    fn subtraction_desugars() {
        let e = parse("x1 - x2", 2, Field::Real).unwrap();
        let expected = sum(var(1), product(constant_re(-1.0), var(2)));
        assert_eq!(e.root, expected);
    }

    #[test]
    fn star_in_source_normalizes_away() {
        let e = parse("star(x1 * x2)", 2, Field::Real).unwrap();
        assert_eq!(e.root, product(var(2), var(1)));
    }

    #[test]
    fn format_then_parse_identity() {
        let cases = [
            "inv(1 + inv(x2)*x1) + 1",
            "x1 - (x1 * x2 + 2.5) * inv(x2 - 1)",
            "-x1 * x2 - -3",
            "inv(0)",
            "1e-3 * x1",
        ];
        for text in cases {
            let e = parse(text, 2, Field::Real).unwrap();
            let printed = format_expr(&e.root);
            let back = parse(&printed, 2, Field::Real).unwrap();
            assert_eq!(back.root, e.root, "round trip failed for `{text}` → `{printed}`");
        }
    }

    #[test]
    fn complex_constant_round_trip() {
        let e = parse("(2 - 3 * i) * x1", 1, Field::Complex).unwrap();
        let printed = format_expr(&e.root);
        let back = parse(&printed, 1, Field::Complex).unwrap();
        assert_eq!(back.root, e.root);
    }
}
