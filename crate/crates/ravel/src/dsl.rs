//! Text syntax for presentations.
//!
//! ```text
//! input      = montesinos | algebraic
//! montesinos = "M" "[" summand ("," summand)* "]" insertion*
//! algebraic  = "A" "[" expr "]"
//! expr       = term ("+" term)*
//! term       = factor ("*" factor)*
//! factor     = summand | "(" expr ")"
//! summand    = "inf" | "[" int ("," int)* "]"
//! insertion  = "v(" int "," int "," int ")"
//! ```
//!
//! Whitespace is allowed between tokens. `*` binds tighter than `+` and both
//! associate to the left.

use std::fmt;

use nom::branch::alt;
use nom::bytes::complete::tag;
use nom::character::complete::{char, i64 as int, multispace0, u64 as uint};
use nom::combinator::{all_consuming, map, map_res, value};
use nom::multi::{many0, separated_list1};
use nom::sequence::{delimited, pair, preceded, tuple};
use nom::IResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::insertion::{CrossingAddress, VertexInsertion};
use crate::tangle_core::{AlgebraicExpr, BoxVector, MontesinosPresentation, Summand};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at column {column}: {message}")]
pub struct ParseError {
    /// From 1.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Input {
    Montesinos {
        presentation: MontesinosPresentation,
        insertion: Option<VertexInsertion>,
    },
    Algebraic(AlgebraicExpr),
}

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Input::Montesinos { presentation, insertion } => {
                write!(f, "{presentation}")?;
                if let Some(v) = insertion {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
            Input::Algebraic(e) => write!(f, "A[{e}]"),
        }
    }
}

fn ws<'a, O>(inner: impl FnMut(&'a str) -> IResult<&'a str, O>) -> impl FnMut(&'a str) -> IResult<&'a str, O> {
    delimited(multispace0, inner, multispace0)
}

fn summand(s: &str) -> IResult<&str, Summand> {
    alt((
        value(Summand::Infinity, ws(tag("inf"))),
        map_res(
            delimited(ws(char('[')), separated_list1(ws(char(',')), ws(int)), ws(char(']'))),
            |v: Vec<i64>| BoxVector::new(v).map(Summand::Rational),
        ),
    ))(s)
}

fn address(s: &str) -> IResult<&str, CrossingAddress> {
    let n = || map(ws(uint), |x| x as usize);
    map(
        tuple((ws(tag("v")), ws(char('(')), n(), ws(char(',')), n(), ws(char(',')), n(), ws(char(')')))),
        |(_, _, i, _, j, _, t, _)| CrossingAddress::new(i, j, t),
    )(s)
}

fn montesinos(s: &str) -> IResult<&str, Input> {
    map_res(
        pair(
            preceded(
                ws(char('M')),
                delimited(ws(char('[')), separated_list1(ws(char(',')), summand), ws(char(']'))),
            ),
            many0(address),
        ),
        |(summands, addrs)| {
            let insertion = if addrs.is_empty() { None } else { Some(VertexInsertion::new(addrs)?) };
            Ok::<_, crate::insertion::InsertionError>(Input::Montesinos {
                presentation: MontesinosPresentation::new(summands),
                insertion,
            })
        },
    )(s)
}

fn factor(s: &str) -> IResult<&str, AlgebraicExpr> {
    alt((map(summand, AlgebraicExpr::Leaf), delimited(ws(char('(')), expr, ws(char(')')))))(s)
}

fn term(s: &str) -> IResult<&str, AlgebraicExpr> {
    let (s, first) = factor(s)?;
    let (s, rest) = many0(preceded(ws(char('*')), factor))(s)?;
    Ok((s, rest.into_iter().fold(first, AlgebraicExpr::product)))
}

fn expr(s: &str) -> IResult<&str, AlgebraicExpr> {
    let (s, first) = term(s)?;
    let (s, rest) = many0(preceded(ws(char('+')), term))(s)?;
    Ok((s, rest.into_iter().fold(first, AlgebraicExpr::sum)))
}

fn algebraic(s: &str) -> IResult<&str, Input> {
    map(
        preceded(ws(char('A')), delimited(ws(char('[')), expr, ws(char(']')))),
        Input::Algebraic,
    )(s)
}

pub fn parse(text: &str) -> Result<Input, ParseError> {
    match all_consuming(alt((montesinos, algebraic)))(text) {
        Ok((_, v)) => Ok(v),
        Err(nom::Err::Error(e) | nom::Err::Failure(e)) => {
            let column = text.len() - e.input.len() + 1;
            let message = match e.code {
                nom::error::ErrorKind::MapRes => "invalid box vector or insertion".to_string(),
                nom::error::ErrorKind::Eof => "unexpected trailing input".to_string(),
                _ => "unexpected input".to_string(),
            };
            Err(ParseError { column, message })
        }
        Err(nom::Err::Incomplete(_)) => Err(ParseError { column: text.len() + 1, message: "incomplete input".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presentations() {
        let Input::Montesinos { presentation, insertion } = parse("M[[2,2],[0,1,2]] v(2,2,1)").unwrap() else {
            panic!()
        };
        assert_eq!(presentation.len(), 2);
        assert_eq!(insertion.unwrap().addresses().next(), Some(&CrossingAddress::new(2, 2, 1)));
        assert!(matches!(parse(" M [ inf , inf ] ").unwrap(), Input::Montesinos { insertion: None, .. }));
    }

    #[test]
    fn parses_algebraic_with_precedence() {
        let Input::Algebraic(e) = parse("A[[2] + [3] * inf]").unwrap() else { panic!() };
        assert_eq!(e.to_string(), "([2] + ([3] * inf))");
    }

    #[test]
    fn reports_positions() {
        assert_eq!(parse("M[[2,-3]]").unwrap_err().column, 1);
        let e = parse("M[[2,3]] w").unwrap_err();
        assert!(e.column > 1, "{e}");
        assert!(parse("M[[2,3]] v(1,1,1) v(1,1,1)").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn round_trips() {
        for s in ["M[[2,3]]", "M[inf,[1,2,2]] v(2,2,1) v(2,3,2)", "A[(([2,3] + inf) * [1,1])]"] {
            let x = parse(s).unwrap();
            assert_eq!(parse(&x.to_string()).unwrap(), x);
        }
    }
}
