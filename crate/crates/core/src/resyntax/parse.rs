use std::fmt;

use super::{Regex, TagId};

/// Largest accepted repetition bound.
pub const MAX_REPEAT: u32 = 1000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    Unexpected(char),
    UnmatchedParen,
    BadEscape(char),
    BadBounds,
    BoundsOutOfOrder { lo: u32, hi: u32 },
    BoundTooLarge(u64),
    NothingToRepeat,
}

/// Syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of pattern"),
            ParseErrorKind::Unexpected(c) => write!(f, "unexpected {c:?}"),
            ParseErrorKind::UnmatchedParen => write!(f, "unmatched parenthesis"),
            ParseErrorKind::BadEscape(c) => write!(f, "unknown escape \\{c}"),
            ParseErrorKind::BadBounds => write!(f, "malformed repetition bounds"),
            ParseErrorKind::BoundsOutOfOrder { lo, hi } => {
                write!(f, "repetition bounds {{{lo},{hi}}} out of order")
            }
            ParseErrorKind::BoundTooLarge(n) => {
                write!(f, "repetition bound {n} exceeds {MAX_REPEAT}")
            }
            ParseErrorKind::NothingToRepeat => write!(f, "repetition operator with no operand"),
        }
    }
}

pub(crate) fn is_special(b: u8) -> bool {
    matches!(b, b'|' | b'(' | b')' | b'{' | b'}' | b'*' | b'+' | b'?' | b'#' | b'\\')
}

/// Parses the concrete syntax into a tagged AST.
///
/// Bytes stand for themselves. `(...)` is a capturing group and yields an
/// opening and a closing tag, `#` yields a single tag, `(?:...)` only
/// groups. Tags are numbered from 1 in order of their token's position.
/// Postfix operators are `*`, `+`, `?`, `{n}`, `{n,}` and `{n,m}`.
///
/// ```
/// use tdfa::resyntax::{parse_regex, Regex};
///
/// let e = parse_regex("(a)*").unwrap();
/// let group = Regex::cat(Regex::Tag(1), Regex::cat(Regex::Symbol(b'a'), Regex::Tag(2)));
/// assert_eq!(e, Regex::rep(group, 0, None));
/// ```
pub fn parse_regex(text: &str) -> Result<Regex, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, next_tag: 0 };
    let e = p.alt()?;
    if p.pos < p.src.len() {
        // Only a stray ')' can stop the top-level alternation early.
        return Err(p.err(ParseErrorKind::UnmatchedParen));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    next_tag: TagId,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn fresh_tag(&mut self) -> Regex {
        self.next_tag += 1;
        Regex::Tag(self.next_tag)
    }

    fn alt(&mut self) -> Result<Regex, ParseError> {
        let mut branches = vec![self.cat()?];
        while self.peek() == Some(b'|') {
            self.pos += 1;
            branches.push(self.cat()?);
        }
        let mut acc = branches.pop().unwrap();
        while let Some(b) = branches.pop() {
            acc = Regex::alt(b, acc);
        }
        Ok(acc)
    }

    fn cat(&mut self) -> Result<Regex, ParseError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == b'|' || c == b')' {
                break;
            }
            items.push(self.repeat()?);
        }
        Ok(Regex::cat_all(items))
    }

    fn repeat(&mut self) -> Result<Regex, ParseError> {
        let mut e = self.atom()?;
        loop {
            let (lo, hi) = match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    (0, None)
                }
                Some(b'+') => {
                    self.pos += 1;
                    (1, None)
                }
                Some(b'?') => {
                    self.pos += 1;
                    (0, Some(1))
                }
                Some(b'{') => self.bounds()?,
                _ => return Ok(e),
            };
            e = Regex::rep(e, lo, hi);
        }
    }

    fn bounds(&mut self) -> Result<(u32, Option<u32>), ParseError> {
        let start = self.pos;
        self.pos += 1;
        let lo = self.number()?;
        let hi = match self.peek() {
            Some(b'}') => Some(lo),
            Some(b',') => {
                self.pos += 1;
                if self.peek() == Some(b'}') {
                    None
                } else {
                    Some(self.number()?)
                }
            }
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(_) => return Err(self.err(ParseErrorKind::BadBounds)),
        };
        match self.peek() {
            Some(b'}') => self.pos += 1,
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(_) => return Err(self.err(ParseErrorKind::BadBounds)),
        }
        if let Some(hi) = hi {
            if lo > hi {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::BoundsOutOfOrder { lo, hi },
                });
            }
        }
        Ok((lo, hi))
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        let mut n: u64 = 0;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            n = (n * 10 + u64::from(c - b'0')).min(u64::from(u32::MAX));
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.peek() {
                None => self.err(ParseErrorKind::UnexpectedEnd),
                Some(_) => self.err(ParseErrorKind::BadBounds),
            });
        }
        if n > u64::from(MAX_REPEAT) {
            return Err(ParseError { offset: start, kind: ParseErrorKind::BoundTooLarge(n) });
        }
        Ok(n as u32)
    }

    fn atom(&mut self) -> Result<Regex, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.err(ParseErrorKind::UnexpectedEnd));
        };
        match c {
            b'(' => {
                let open_at = self.pos;
                self.pos += 1;
                let capturing = !self.src[self.pos..].starts_with(b"?:");
                let open = if capturing {
                    Some(self.fresh_tag())
                } else {
                    self.pos += 2;
                    None
                };
                let body = self.alt()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError { offset: open_at, kind: ParseErrorKind::UnmatchedParen });
                }
                self.pos += 1;
                Ok(match open {
                    Some(open) => {
                        let close = self.fresh_tag();
                        Regex::cat(open, Regex::cat(body, close))
                    }
                    None => body,
                })
            }
            b'#' => {
                self.pos += 1;
                Ok(self.fresh_tag())
            }
            b'\\' => {
                self.pos += 1;
                match self.peek() {
                    Some(e) if is_special(e) => {
                        self.pos += 1;
                        Ok(Regex::Symbol(e))
                    }
                    Some(e) => Err(self.err(ParseErrorKind::BadEscape(e as char))),
                    None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
                }
            }
            b'*' | b'+' | b'?' | b'{' => Err(self.err(ParseErrorKind::NothingToRepeat)),
            b'}' => Err(self.err(ParseErrorKind::Unexpected('}'))),
            _ => {
                self.pos += 1;
                Ok(Regex::Symbol(c))
            }
        }
    }
}
