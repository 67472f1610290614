use std::fmt;

use thiserror::Error;

/// Position in a source text, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },

    #[error("{0}")]
    Semantic(String),

    #[error("sort mismatch for {0}")]
    SortMismatch(String),

    #[error("{method}: analysis skipped: {reason}")]
    Skip { method: String, reason: String },

    #[error("summaries did not stabilize after {iters} iterations in {{{}}}", .scc.join(", "))]
    NonTermination { iters: usize, scc: Vec<String> },

    #[error("{method}: monotonicity violated at iteration {iter}")]
    Monotonicity { method: String, iter: usize },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        Error::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    pub fn semantic(msg: impl Into<String>) -> Self {
        Error::Semantic(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
