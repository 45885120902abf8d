use crate::resyntax::ParseError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Parse(ParseError),
    #[error("automaton exceeds the limit of {limit} states")]
    TooManyStates { limit: usize },
    #[error("invalid option combination: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}
