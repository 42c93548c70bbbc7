//! Frontend for a single-module, single-variable subset of the PRISM language.

mod ast;
mod build;
pub(crate) mod lexer;
pub(crate) mod parser;
pub(crate) mod print;
mod tabular;

pub use ast::*;
pub use build::build_explicit;
pub use parser::parse_prism;
pub use print::print_prism;
pub use tabular::{convert_tabular, TabularMdpInput};

use crate::error::{Error, Result};
use crate::model::ExplicitMdp;

/// Reads, parses and expands a model file.
pub fn load_model(path: &std::path::Path) -> Result<(PrismModel, ExplicitMdp)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ast = parse_prism(&text)?;
    let mdp = build_explicit(&ast)?;
    Ok((ast, mdp))
}

/// The four-state sepsis treatment excerpt used throughout the tests and docs.
pub const LISTING_ONE: &str = r#"mdp

module sepsis
  s : [0..3] init 0; // state variable

  // From state 0, action a0:
  //   -> state 1 (w.p. 0.7), state 2 (w.p. 0.3)
  [a0] s=0 -> 0.7:(s'=1) + 0.3:(s'=2);

  // From state 0, action a1:
  //   -> state 1 (w.p. 0.4), state 3 (w.p. 0.6)
  [a1] s=0 -> 0.4:(s'=1) + 0.6:(s'=3);

  // From state 1, action a0:
  //   -> state 2 (w.p. 0.8), state 3 (w.p. 0.2)
  [a0] s=1 -> 0.8:(s'=2) + 0.2:(s'=3);

  // Absorbing states (survival and death)
  [end] s=2 -> 1.0:(s'=2); // survival
  [end] s=3 -> 1.0:(s'=3); // death

endmodule

// Atomic labels for state propositions
label "survival" = s=2;
label "death" = s=3;

// Reward: +1 for reaching survival state
rewards
  s=2 : 1;
endrewards
"#;
