//! S-expression tokenizer with line/column tracking.

use super::ast::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    LParen,
    RParen,
    /// Bare symbol, lowercased (`generator`, `fuel_level`, `-`, `*`, `#t`).
    Sym(String),
    /// `:keyword`, lowercased, without the colon.
    Key(String),
    /// `?variable`, lowercased, without the question mark.
    Var(String),
    /// Decimal literal, kept as the raw text.
    Num(String),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(text: &str) -> Result<Vec<Token>, (Span, String)> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                out.push(Token {
                    tok: Tok::LParen,
                    span,
                });
            }
            ')' => {
                chars.next();
                col += 1;
                out.push(Token {
                    tok: Tok::RParen,
                    span,
                });
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                let tok = classify(&word, span)?;
                out.push(Token { tok, span });
            }
        }
    }
    Ok(out)
}

fn classify(word: &str, span: Span) -> Result<Tok, (Span, String)> {
    let lower = word.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix(':') {
        return Ok(Tok::Key(rest.to_string()));
    }
    if let Some(rest) = lower.strip_prefix('?') {
        return Ok(Tok::Var(rest.to_string()));
    }
    let numeric = {
        let body = lower.strip_prefix('-').unwrap_or(&lower);
        !body.is_empty() && body.chars().all(|c| c.is_ascii_digit() || c == '.')
    };
    if numeric {
        let dots = lower.matches('.').count();
        if dots > 1 {
            return Err((span, format!("malformed number `{word}`")));
        }
        return Ok(Tok::Num(lower));
    }
    Ok(Tok::Sym(lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_mixed_tokens() {
        let toks = lex("(define (domain d) :x ?v -12.5 #t)").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::LParen,
                Tok::Sym("define".into()),
                Tok::LParen,
                Tok::Sym("domain".into()),
                Tok::Sym("d".into()),
                Tok::RParen,
                Tok::Key("x".into()),
                Tok::Var("v".into()),
                Tok::Num("-12.5".into()),
                Tok::Sym("#t".into()),
                Tok::RParen,
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = lex("; header\n(a\n b)").unwrap();
        assert_eq!(toks[0].span.line, 2);
        assert_eq!(toks[2].span.line, 3);
        assert_eq!(toks[2].span.col, 2);
    }

    #[test]
    fn rejects_double_dot_number() {
        assert!(lex("(= (f) 1.2.3)").is_err());
    }
}
