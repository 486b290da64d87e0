use super::error::{ParseError, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Dot,
    Neck,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Bang,
    At,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Neck => ":-",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::At => "@",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }

    fn span_from(&self, (start, line, col): (usize, u32, u32)) -> Span {
        Span { start, end: self.pos, line, col }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { src, pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let mark = cur.mark();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, span: cur.span_from(mark) });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '@' => Tok::At,
            ':' if cur.peek() == Some('-') => {
                cur.bump();
                Tok::Neck
            }
            ':' => Tok::Colon,
            '=' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::EqEq
            }
            '=' => Tok::Assign,
            '!' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::NotEq
            }
            '!' => Tok::Bang,
            '<' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Le
            }
            '<' => Tok::Lt,
            '>' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Ge
            }
            '>' => Tok::Gt,
            '&' if cur.peek() == Some('&') => {
                cur.bump();
                Tok::AndAnd
            }
            '|' if cur.peek() == Some('|') => {
                cur.bump();
                Tok::OrOr
            }
            '"' => lex_string(&mut cur, mark)?,
            c if c.is_ascii_digit() => {
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                // A dot only continues the number when a digit follows, so
                // `p(3).` still terminates the clause.
                if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                let text = &src[mark.0..cur.pos];
                Tok::Number(text.parse().map_err(|_| {
                    ParseError::syntax(cur.span_from(mark), format!("invalid number `{text}`"))
                })?)
            }
            c if c.is_alphabetic() || c == '_' => {
                while cur.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    cur.bump();
                }
                Tok::Ident(src[mark.0..cur.pos].to_string())
            }
            other => {
                return Err(ParseError::syntax(
                    cur.span_from(mark),
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        out.push(Token { tok, span: cur.span_from(mark) });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), ParseError> {
    loop {
        match cur.peek() {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('/') if cur.peek2() == Some('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            Some('/') if cur.peek2() == Some('*') => {
                let mark = cur.mark();
                cur.bump();
                cur.bump();
                loop {
                    match cur.bump() {
                        Some('*') if cur.peek() == Some('/') => {
                            cur.bump();
                            break;
                        }
                        Some(_) => {}
                        None => {
                            return Err(ParseError::syntax(
                                cur.span_from(mark),
                                "unterminated block comment",
                            ))
                        }
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_string(cur: &mut Cursor<'_>, mark: (usize, u32, u32)) -> Result<Tok, ParseError> {
    let mut text = String::new();
    loop {
        match cur.bump() {
            Some('"') => return Ok(Tok::Str(text)),
            Some('\\') => match cur.bump() {
                Some('n') => text.push('\n'),
                Some('t') => text.push('\t'),
                Some(c @ ('"' | '\\')) => text.push(c),
                _ => return Err(ParseError::syntax(cur.span_from(mark), "invalid escape in string")),
            },
            Some('\n') | None => {
                return Err(ParseError::syntax(cur.span_from(mark), "unterminated string"))
            }
            Some(c) => text.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn clause_punctuation() {
        assert_eq!(
            toks("eat :- not(danger)."),
            vec![
                Tok::Ident("eat".into()),
                Tok::Neck,
                Tok::Ident("not".into()),
                Tok::LParen,
                Tok::Ident("danger".into()),
                Tok::RParen,
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn number_before_clause_dot() {
        assert_eq!(
            toks("p(3). q(2.5)."),
            vec![
                Tok::Ident("p".into()),
                Tok::LParen,
                Tok::Number(3.0),
                Tok::RParen,
                Tok::Dot,
                Tok::Ident("q".into()),
                Tok::LParen,
                Tok::Number(2.5),
                Tok::RParen,
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn spans_track_lines() {
        let t = tokenize("a\n  // note\n  bb").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (3, 3));
        assert_eq!(&"a\n  // note\n  bb"[t[1].span.start..t[1].span.end], "bb");
    }

    #[test]
    fn stray_character_is_rejected() {
        let err = tokenize("agent x { $ }").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 11));
    }
}
