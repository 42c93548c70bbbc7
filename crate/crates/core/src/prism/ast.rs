use std::fmt;

use crate::error::Location;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mdp,
    Dtmc,
}

/// Source position attached to AST nodes for diagnostics.
///
/// Spans never take part in equality, so reparsed text compares equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span(pub Location);

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Neq => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Propositional formula over comparisons of the single state variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    True,
    False,
    Cmp(CmpOp, i64),
    Not(Box<Guard>),
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
}

impl Guard {
    pub fn eval(&self, value: i64) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Cmp(op, rhs) => op.eval(value, *rhs),
            Guard::Not(g) => !g.eval(value),
            Guard::And(a, b) => a.eval(value) && b.eval(value),
            Guard::Or(a, b) => a.eval(value) || b.eval(value),
        }
    }

    /// Writes the guard with `var` as the variable name; fully parenthesized below the top level.
    pub fn display<'a>(&'a self, var: &'a str) -> impl fmt::Display + 'a {
        GuardDisplay { guard: self, var }
    }
}

struct GuardDisplay<'a> {
    guard: &'a Guard,
    var: &'a str,
}

impl fmt::Display for GuardDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = self.var;
        match self.guard {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Cmp(op, v) => write!(f, "{var}{}{v}", op.symbol()),
            Guard::Not(g) => write!(f, "!({})", g.display(var)),
            Guard::And(a, b) => write!(f, "({}) & ({})", a.display(var), b.display(var)),
            Guard::Or(a, b) => write!(f, "({}) | ({})", a.display(var), b.display(var)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub init: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub probability: f64,
    pub target: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    /// `None` for `[]` commands.
    pub action: Option<String>,
    pub guard: Guard,
    pub updates: Vec<Update>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDecl {
    pub name: String,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardItem {
    pub guard: Guard,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardStructure {
    pub name: Option<String>,
    pub items: Vec<RewardItem>,
}

/// A parsed single-module, single-variable PRISM model.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismModel {
    pub kind: ModelKind,
    pub module_name: String,
    pub variable: Variable,
    pub commands: Vec<Command>,
    pub labels: Vec<LabelDecl>,
    pub rewards: Option<RewardStructure>,
}
