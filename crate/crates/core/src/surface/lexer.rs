use super::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Word(String),
    Zero,
    Pipe,
    Semi,
    Dot,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Bang,
    Question,
    Plus,
    Amp,
    Star,
    At,
    Lt,
    Eq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Zero => "0",
            Tok::Pipe => "|",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Bang => "!",
            Tok::Question => "?",
            Tok::Plus => "+",
            Tok::Amp => "&",
            Tok::Star => "*",
            Tok::At => "@",
            Tok::Lt => "<",
            Tok::Eq => "=",
            Tok::Word(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut w = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                w.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Word(w),
                span: Span::new(start.0, start.1, line, col),
            });
            continue;
        }
        let tok = match c {
            '0' => Tok::Zero,
            '|' => Tok::Pipe,
            ';' => Tok::Semi,
            '.' => Tok::Dot,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '!' => Tok::Bang,
            '?' => Tok::Question,
            '+' => Tok::Plus,
            '&' => Tok::Amp,
            '*' => Tok::Star,
            '@' => Tok::At,
            '<' => Tok::Lt,
            '=' => Tok::Eq,
            other => {
                return Err(Diagnostic::error(
                    Span::new(line, col, line, col + 1),
                    format!("unexpected character `{}`", other.escape_default()),
                ))
            }
        };
        i += 1;
        col += 1;
        out.push(Token {
            tok,
            span: Span::new(start.0, start.1, line, col),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col, line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_symbols() {
        let toks: Vec<Tok> = lex("x!oc2(aH1') -- trailing\n| 0").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Word("x".into()),
                Tok::Bang,
                Tok::Word("oc2".into()),
                Tok::LParen,
                Tok::Word("aH1'".into()),
                Tok::RParen,
                Tok::Pipe,
                Tok::Zero,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unicode_rejected_with_position() {
        let d = lex("close\n  ν").unwrap_err();
        assert_eq!((d.span.line, d.span.col), (2, 3));
    }

    #[test]
    fn digits_other_than_zero_rejected() {
        assert!(lex("1").is_err());
    }
}
