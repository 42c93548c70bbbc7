use std::fmt;

use crate::error::{Error, Location, ParseError, ParseErrorKind, Result};
use crate::model::LabelledModel;
use crate::prism::lexer::{tokenize, Tok};
use crate::prism::parser::Parser;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Bound {
    pub fn holds(self, value: f64, p: f64) -> bool {
        match self {
            Bound::Lt => value < p,
            Bound::Le => value <= p,
            Bound::Ge => value >= p,
            Bound::Gt => value > p,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Bound::Lt => "<",
            Bound::Le => "<=",
            Bound::Ge => ">=",
            Bound::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    /// `=?`
    Compute,
    Threshold(Bound, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Label(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Eventually(StateFormula),
    Until(StateFormula, StateFormula),
}

impl PathFormula {
    /// `(stay, goal)`: `F g` is `true U g`.
    pub fn as_until(&self) -> (StateFormula, &StateFormula) {
        match self {
            PathFormula::Eventually(g) => (StateFormula::True, g),
            PathFormula::Until(a, b) => (a.clone(), b),
        }
    }
}

/// `P[max|min] (=? | ~p) [ path ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PctlFormula {
    pub direction: Option<Direction>,
    pub query: Query,
    pub path: PathFormula,
}

impl StateFormula {
    /// Satisfaction vector over all states of `model`.
    pub fn satisfying<M: LabelledModel + ?Sized>(&self, model: &M) -> Result<Vec<bool>> {
        let n = model.n_states();
        Ok(match self {
            StateFormula::True => vec![true; n],
            StateFormula::False => vec![false; n],
            StateFormula::Label(name) => {
                let states = model
                    .labels()
                    .get(name)
                    .ok_or_else(|| Error::UnknownLabel(name.clone()))?;
                let mut v = vec![false; n];
                for &s in states.range(..n) {
                    v[s] = true;
                }
                v
            }
            StateFormula::Not(f) => f.satisfying(model)?.into_iter().map(|b| !b).collect(),
            StateFormula::And(a, b) => zip(a.satisfying(model)?, b.satisfying(model)?, |x, y| x && y),
            StateFormula::Or(a, b) => zip(a.satisfying(model)?, b.satisfying(model)?, |x, y| x || y),
        })
    }

    /// Label names referenced by the formula, in order of appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            StateFormula::Label(l) => out.push(l),
            StateFormula::Not(f) => f.collect_labels(out),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
            StateFormula::True | StateFormula::False => {}
        }
    }
}

impl PctlFormula {
    pub fn labels(&self) -> Vec<&str> {
        match &self.path {
            PathFormula::Eventually(g) => g.labels(),
            PathFormula::Until(a, b) => {
                let mut l = a.labels();
                l.extend(b.labels());
                l
            }
        }
    }

    /// Resolves a threshold query against a computed probability.
    pub fn verdict(&self, value: f64) -> Option<bool> {
        match self.query {
            Query::Compute => None,
            Query::Threshold(b, p) => Some(b.holds(value, p)),
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => write!(f, "true"),
            StateFormula::False => write!(f, "false"),
            StateFormula::Label(l) => write!(f, "\"{l}\""),
            StateFormula::Not(x) => write!(f, "!{}", Paren(x)),
            StateFormula::And(a, b) => write!(f, "{} & {}", Paren(a), Paren(b)),
            StateFormula::Or(a, b) => write!(f, "{} | {}", Paren(a), Paren(b)),
        }
    }
}

struct Paren<'a>(&'a StateFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            StateFormula::And(..) | StateFormula::Or(..) | StateFormula::Not(..) => {
                write!(f, "({})", self.0)
            }
            atom => write!(f, "{atom}"),
        }
    }
}

impl fmt::Display for PctlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P")?;
        match self.direction {
            Some(Direction::Max) => write!(f, "max")?,
            Some(Direction::Min) => write!(f, "min")?,
            None => {}
        }
        match self.query {
            Query::Compute => write!(f, "=?")?,
            Query::Threshold(b, p) => write!(f, "{}{p}", b.symbol())?,
        }
        match &self.path {
            PathFormula::Eventually(g) => write!(f, " [ F {} ]", Paren(g)),
            PathFormula::Until(a, b) => write!(f, " [ {} U {} ]", Paren(a), Paren(b)),
        }
    }
}

impl std::str::FromStr for PctlFormula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_property(s)
    }
}

pub fn parse_property(text: &str) -> Result<PctlFormula, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let f = property(&mut p)?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of property"));
    }
    Ok(f)
}

fn property(p: &mut Parser) -> Result<PctlFormula, ParseError> {
    let direction = match p.peek() {
        Tok::Ident(s) if s == "P" => None,
        Tok::Ident(s) if s == "Pmax" => Some(Direction::Max),
        Tok::Ident(s) if s == "Pmin" => Some(Direction::Min),
        Tok::Ident(s) if matches!(s.as_str(), "R" | "S" | "Rmax" | "Rmin") => {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                p.loc(),
                format!("`{s}` operator is not supported"),
            ))
        }
        _ => return Err(p.unexpected("`P`, `Pmax` or `Pmin`")),
    };
    p.advance();
    let query = match p.peek() {
        Tok::Eq => {
            p.advance();
            p.expect(Tok::Question, "`?`")?;
            Query::Compute
        }
        Tok::Lt | Tok::Le | Tok::Ge | Tok::Gt => {
            let bound = match p.advance().tok {
                Tok::Lt => Bound::Lt,
                Tok::Le => Bound::Le,
                Tok::Ge => Bound::Ge,
                _ => Bound::Gt,
            };
            let loc = p.loc();
            let v = p.number()?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ParseError::new(
                    ParseErrorKind::Semantic,
                    loc,
                    format!("threshold out of range: {v} is not in [0,1]"),
                ));
            }
            Query::Threshold(bound, v)
        }
        _ => return Err(p.unexpected("`=?` or a probability bound")),
    };
    p.expect(Tok::LBracket, "`[`")?;
    let path = if matches!(p.peek(), Tok::Ident(s) if s == "F") {
        p.advance();
        reject_step_bound(p)?;
        PathFormula::Eventually(state_or(p)?)
    } else {
        let lhs = state_or(p)?;
        match p.peek() {
            Tok::Ident(s) if s == "U" => {
                p.advance();
                reject_step_bound(p)?;
                PathFormula::Until(lhs, state_or(p)?)
            }
            Tok::Ident(s) if matches!(s.as_str(), "X" | "G" | "W" | "R") => {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    p.loc(),
                    format!("path operator `{s}` is not supported"),
                ))
            }
            _ => return Err(p.unexpected("`U`")),
        }
    };
    p.expect(Tok::RBracket, "`]`")?;
    Ok(PctlFormula { direction, query, path })
}

fn reject_step_bound(p: &Parser) -> Result<(), ParseError> {
    if matches!(p.peek(), Tok::Le | Tok::Lt) {
        return Err(ParseError::new(
            ParseErrorKind::Unsupported,
            p.loc(),
            "step-bounded path operators are not supported",
        ));
    }
    Ok(())
}

fn state_or(p: &mut Parser) -> Result<StateFormula, ParseError> {
    let mut lhs = state_and(p)?;
    while *p.peek() == Tok::Bar {
        p.advance();
        lhs = StateFormula::Or(Box::new(lhs), Box::new(state_and(p)?));
    }
    Ok(lhs)
}

fn state_and(p: &mut Parser) -> Result<StateFormula, ParseError> {
    let mut lhs = state_unary(p)?;
    while *p.peek() == Tok::Amp {
        p.advance();
        lhs = StateFormula::And(Box::new(lhs), Box::new(state_unary(p)?));
    }
    Ok(lhs)
}

fn state_unary(p: &mut Parser) -> Result<StateFormula, ParseError> {
    match p.peek().clone() {
        Tok::Bang => {
            p.advance();
            Ok(StateFormula::Not(Box::new(state_unary(p)?)))
        }
        Tok::LParen => {
            p.advance();
            let f = state_or(p)?;
            p.expect(Tok::RParen, "`)`")?;
            Ok(f)
        }
        Tok::Str(s) => {
            p.advance();
            Ok(StateFormula::Label(s))
        }
        Tok::Ident(s) if s == "true" => {
            p.advance();
            Ok(StateFormula::True)
        }
        Tok::Ident(s) if s == "false" => {
            p.advance();
            Ok(StateFormula::False)
        }
        Tok::Ident(s) if s.starts_with('P') => Err(ParseError::new(
            ParseErrorKind::Unsupported,
            p.loc(),
            "nested probability operators are not supported",
        )),
        _ => Err(p.unexpected("state formula")),
    }
}

/// One entry of a property file.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyEntry {
    pub id: String,
    pub text: String,
    pub formula: PctlFormula,
}

/// Parses a property file: one property per line, `#` comments, optional
/// `<id>:` prefix. Entries without an id are numbered from 1.
pub fn parse_property_file(text: &str) -> Result<Vec<PropertyEntry>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (id, body) = split_id(line).unwrap_or_else(|| ((out.len() + 1).to_string(), line));
        let formula = parse_property(body).map_err(|mut e| {
            e.location = Location {
                line: idx + 1,
                column: e.location.column + (raw.len() - raw.trim_start().len()) + (line.len() - body.len()),
            };
            e
        })?;
        out.push(PropertyEntry {
            id,
            text: body.to_string(),
            formula,
        });
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_id(line: &str) -> Option<(String, &str)> {
    let (id, rest) = line.split_once(':')?;
    let id = id.trim();
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return None;
    }
    Some((id.to_string(), rest.trim_start()))
}

pub fn load_property_file(path: &std::path::Path) -> Result<Vec<PropertyEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_property_file(&text)?)
}
