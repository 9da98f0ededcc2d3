/// Location of a syntax element in the source text.
///
/// `start`/`end` are byte offsets; lines and columns are 1-based, columns
/// counted in characters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        let (first, last) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        let end = if last.end >= first.end { last } else { first };
        Span {
            start: first.start,
            end: end.end,
            line: first.line,
            col: first.col,
            end_line: end.end_line,
            end_col: end.end_col,
        }
    }
}
