//! Recursive-descent parser for the supported PRISM subset.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::error::{Location, ParseError, ParseErrorKind};

/// Tolerance on the sum of a command's update probabilities.
pub const UPDATE_SUM_TOLERANCE: f64 = 1e-9;

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "const",
    "formula",
    "global",
    "init",
    "system",
    "endsystem",
    "ctmc",
    "pta",
    "ma",
    "smg",
    "pomdp",
    "probabilistic",
    "nondeterministic",
    "stochastic",
    "bool",
    "clock",
    "invariant",
    "player",
];

pub fn parse_prism(src: &str) -> Result<PrismModel, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    p.model()
}

pub(crate) struct Parser {
    pub(crate) tokens: Vec<Token>,
    pub(crate) pos: usize,
}

impl Parser {
    pub(crate) fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub(crate) fn loc(&self) -> Location {
        self.tokens[self.pos].loc
    }

    pub(crate) fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::syntax(
            self.loc(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    pub(crate) fn expect(&mut self, tok: Tok, what: &str) -> Result<Location, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance().loc)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.check_unsupported()?;
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn check_unsupported(&self) -> Result<(), ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if UNSUPPORTED_KEYWORDS.contains(&s.as_str()) {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    self.loc(),
                    format!("`{s}` is not supported"),
                ));
            }
        }
        Ok(())
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(v) => {
                self.advance();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    pub(crate) fn number(&mut self) -> Result<f64, ParseError> {
        match *self.peek() {
            Tok::Int(v) => {
                self.advance();
                Ok(v as f64)
            }
            Tok::Decimal(v) => {
                self.advance();
                Ok(v)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn model(&mut self) -> Result<PrismModel, ParseError> {
        self.check_unsupported()?;
        let kind = if self.is_keyword("mdp") {
            ModelKind::Mdp
        } else if self.is_keyword("dtmc") {
            ModelKind::Dtmc
        } else {
            return Err(self.unexpected("`mdp` or `dtmc`"));
        };
        self.advance();

        self.expect_keyword("module")?;
        let module_loc = self.loc();
        let module_name = self.ident("module name")?;
        let variable = self.vardecl()?;
        let mut commands = Vec::new();
        while *self.peek() == Tok::LBracket {
            commands.push(self.command(&variable)?);
        }
        self.check_unsupported()?;
        if !self.is_keyword("endmodule") {
            return Err(self.unexpected("command or `endmodule`"));
        }
        if commands.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                module_loc,
                format!("module `{module_name}` has no commands"),
            ));
        }
        self.advance();

        let mut labels = Vec::new();
        let mut rewards = None;
        loop {
            self.check_unsupported()?;
            if self.is_keyword("label") {
                self.advance();
                let name = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.advance();
                        s
                    }
                    _ => return Err(self.unexpected("label name string")),
                };
                self.expect(Tok::Eq, "`=`")?;
                let guard = self.guard(&variable.name)?;
                self.expect(Tok::Semi, "`;`")?;
                labels.push(LabelDecl { name, guard });
            } else if self.is_keyword("rewards") {
                if rewards.is_some() {
                    return Err(ParseError::new(
                        ParseErrorKind::Unsupported,
                        self.loc(),
                        "only one reward structure is supported",
                    ));
                }
                rewards = Some(self.rewards(&variable.name)?);
            } else if self.is_keyword("module") {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    self.loc(),
                    "only a single module is supported",
                ));
            } else if *self.peek() == Tok::Eof {
                break;
            } else {
                return Err(self.unexpected("`label`, `rewards` or end of input"));
            }
        }
        Ok(PrismModel {
            kind,
            module_name,
            variable,
            commands,
            labels,
            rewards,
        })
    }

    fn vardecl(&mut self) -> Result<Variable, ParseError> {
        self.check_unsupported()?;
        let loc = self.loc();
        let name = self.ident("variable declaration")?;
        self.expect(Tok::Colon, "`:`")?;
        if self.is_keyword("bool") {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                self.loc(),
                "boolean variables are not supported",
            ));
        }
        self.expect(Tok::LBracket, "`[`")?;
        let lower = self.int()?;
        self.expect(Tok::DotDot, "`..`")?;
        let upper = self.int()?;
        self.expect(Tok::RBracket, "`]`")?;
        if !self.is_keyword("init") {
            return Err(self.unexpected("`init`"));
        }
        self.advance();
        let init = self.int()?;
        self.expect(Tok::Semi, "`;`")?;
        if lower > upper {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                loc,
                format!("empty range [{lower}..{upper}]"),
            ));
        }
        if !(lower..=upper).contains(&init) {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                loc,
                format!("init {init} outside [{lower}..{upper}]"),
            ));
        }
        if matches!(self.peek(), Tok::Ident(s) if s != "endmodule") {
            return Err(ParseError::new(
                ParseErrorKind::Unsupported,
                self.loc(),
                "only one variable per module is supported",
            ));
        }
        Ok(Variable {
            name,
            lower,
            upper,
            init,
        })
    }

    fn command(&mut self, var: &Variable) -> Result<Command, ParseError> {
        let loc = self.expect(Tok::LBracket, "`[`")?;
        let action = match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Some(s)
            }
            _ => None,
        };
        self.expect(Tok::RBracket, "`]`")?;
        let guard = self.guard(&var.name)?;
        self.expect(Tok::Arrow, "`->`")?;
        let mut updates = vec![self.update(&var.name)?];
        while *self.peek() == Tok::Plus {
            self.advance();
            updates.push(self.update(&var.name)?);
        }
        self.expect(Tok::Semi, "`;`")?;
        let sum: f64 = updates.iter().map(|u| u.probability).sum();
        if (sum - 1.0).abs() > UPDATE_SUM_TOLERANCE {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                loc,
                format!("update probabilities sum to {}", round_for_display(sum)),
            ));
        }
        for u in &updates {
            if !(var.lower..=var.upper).contains(&u.target) {
                return Err(ParseError::new(
                    ParseErrorKind::Semantic,
                    loc,
                    format!("update target {} outside [{}..{}]", u.target, var.lower, var.upper),
                ));
            }
        }
        Ok(Command {
            action,
            guard,
            updates,
            span: Span(loc),
        })
    }

    fn update(&mut self, var: &str) -> Result<Update, ParseError> {
        let loc = self.loc();
        let probability = self.number()?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                loc,
                format!("probability {probability} outside [0,1]"),
            ));
        }
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::LParen, "`(`")?;
        self.variable_ref(var)?;
        self.expect(Tok::Prime, "`'`")?;
        self.expect(Tok::Eq, "`=`")?;
        let target = self.int()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Update { probability, target })
    }

    fn variable_ref(&mut self, var: &str) -> Result<(), ParseError> {
        let loc = self.loc();
        let name = self.ident("variable")?;
        if name != var {
            return Err(ParseError::new(
                ParseErrorKind::Semantic,
                loc,
                format!("unknown variable `{name}`"),
            ));
        }
        Ok(())
    }

    fn rewards(&mut self, var: &str) -> Result<RewardStructure, ParseError> {
        self.expect_keyword("rewards")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Some(s)
            }
            _ => None,
        };
        let mut items = Vec::new();
        while !self.is_keyword("endrewards") {
            if *self.peek() == Tok::LBracket {
                return Err(ParseError::new(
                    ParseErrorKind::Unsupported,
                    self.loc(),
                    "action rewards are not supported",
                ));
            }
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`endrewards`"));
            }
            let guard = self.guard(var)?;
            self.expect(Tok::Colon, "`:`")?;
            let value = self.number()?;
            self.expect(Tok::Semi, "`;`")?;
            items.push(RewardItem { guard, value });
        }
        self.advance();
        Ok(RewardStructure { name, items })
    }

    fn guard(&mut self, var: &str) -> Result<Guard, ParseError> {
        let mut lhs = self.guard_and(var)?;
        while *self.peek() == Tok::Bar {
            self.advance();
            let rhs = self.guard_and(var)?;
            lhs = Guard::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_and(&mut self, var: &str) -> Result<Guard, ParseError> {
        let mut lhs = self.guard_unary(var)?;
        while *self.peek() == Tok::Amp {
            self.advance();
            let rhs = self.guard_unary(var)?;
            lhs = Guard::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self, var: &str) -> Result<Guard, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(Guard::Not(Box::new(self.guard_unary(var)?)))
            }
            Tok::LParen => {
                self.advance();
                let g = self.guard(var)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(g)
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(Guard::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(Guard::False)
            }
            Tok::Ident(_) => {
                self.variable_ref(var)?;
                let op = match self.peek() {
                    Tok::Eq => CmpOp::Eq,
                    Tok::Neq => CmpOp::Neq,
                    Tok::Lt => CmpOp::Lt,
                    Tok::Le => CmpOp::Le,
                    Tok::Gt => CmpOp::Gt,
                    Tok::Ge => CmpOp::Ge,
                    _ => return Err(self.unexpected("comparison operator")),
                };
                self.advance();
                Ok(Guard::Cmp(op, self.int()?))
            }
            _ => Err(self.unexpected("guard")),
        }
    }
}

fn round_for_display(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}
