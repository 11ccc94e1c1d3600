use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Colon,
    ColonColon,
    Assign,
    EqEq,
    NotEq,
    Star,
    Amp,
    Bang,
    Dot,
    Arrow,
    /// `|->`
    PointsTo,
    /// `&*&`
    SepConj,
    Question,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::ColonColon => "::",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Star => "*",
            Tok::Amp => "&",
            Tok::Bang => "!",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::PointsTo => "|->",
            Tok::SepConj => "&*&",
            Tok::Question => "?",
            Tok::Ident(_) | Tok::Int(_) => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
    /// Token came from a `//@` or `/*@ ... @*/` annotation.
    pub ghost: bool,
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span(),
            message: message.into(),
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    // Some(true) while inside `/*@ ... @*/`, Some(false) inside `//@ ...`.
    let mut ghost_region: Option<bool> = None;

    while let Some(c) = lx.peek(0) {
        if c == '\n' {
            if ghost_region == Some(false) {
                ghost_region = None;
            }
            lx.bump();
            continue;
        }
        if c.is_whitespace() {
            lx.bump();
            continue;
        }
        if ghost_region == Some(true) && lx.starts_with("@*/") {
            for _ in 0..3 {
                lx.bump();
            }
            ghost_region = None;
            continue;
        }
        if ghost_region.is_none() && lx.starts_with("//@") {
            for _ in 0..3 {
                lx.bump();
            }
            ghost_region = Some(false);
            continue;
        }
        if ghost_region.is_none() && lx.starts_with("/*@") {
            for _ in 0..3 {
                lx.bump();
            }
            ghost_region = Some(true);
            continue;
        }
        if lx.starts_with("//") {
            while let Some(c) = lx.peek(0) {
                if c == '\n' {
                    break;
                }
                lx.bump();
            }
            continue;
        }
        if lx.starts_with("/*") {
            let start = lx.span();
            lx.bump();
            lx.bump();
            loop {
                if lx.starts_with("*/") {
                    lx.bump();
                    lx.bump();
                    break;
                }
                if lx.bump().is_none() {
                    return Err(ParseError {
                        span: start,
                        message: "unterminated block comment".into(),
                    });
                }
            }
            continue;
        }

        let span = lx.span();
        let ghost = ghost_region.is_some();
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = lx.peek(0) {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = lx.peek(0) {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    lx.bump();
                } else {
                    break;
                }
            }
            let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
            let n = digits
                .parse::<u64>()
                .map_err(|_| ParseError { span, message: format!("invalid integer literal `{s}`") })?;
            Tok::Int(n)
        } else if ghost && lx.starts_with("&*&") {
            lx.bump();
            lx.bump();
            lx.bump();
            Tok::SepConj
        } else if lx.starts_with("|->") {
            lx.bump();
            lx.bump();
            lx.bump();
            Tok::PointsTo
        } else {
            let two = match (c, lx.peek(1)) {
                (':', Some(':')) => Some(Tok::ColonColon),
                ('=', Some('=')) => Some(Tok::EqEq),
                ('!', Some('=')) => Some(Tok::NotEq),
                ('-', Some('>')) => Some(Tok::Arrow),
                _ => None,
            };
            if let Some(t) = two {
                lx.bump();
                lx.bump();
                t
            } else {
                let t = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '=' => Tok::Assign,
                    '*' => Tok::Star,
                    '&' => Tok::Amp,
                    '!' => Tok::Bang,
                    '.' => Tok::Dot,
                    '?' => Tok::Question,
                    other => return Err(lx.err(format!("unexpected character `{other}`"))),
                };
                lx.bump();
                t
            }
        };
        out.push(Token { tok, span, ghost });
    }

    if ghost_region == Some(true) {
        return Err(lx.err("unterminated `/*@` annotation"));
    }
    Ok(out)
}
