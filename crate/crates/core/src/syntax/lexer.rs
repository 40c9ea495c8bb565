//! Tokenizer for the `.qpl` surface syntax.

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Qubits,
    Skip,
    If,
    Then,
    Else,
    While,
    Do,
    GateH,
    GateT,
    GateX,
    GateY,
    GateZ,
    GateCNot,
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::Eof => "end of input".to_string(),
            Token::LBrace => "`{`".to_string(),
            Token::RBrace => "`}`".to_string(),
            Token::LParen => "`(`".to_string(),
            Token::RParen => "`)`".to_string(),
            Token::Comma => "`,`".to_string(),
            Token::Semi => "`;`".to_string(),
            Token::Qubits => "`qubits`".to_string(),
            Token::Skip => "`skip`".to_string(),
            Token::If => "`if`".to_string(),
            Token::Then => "`then`".to_string(),
            Token::Else => "`else`".to_string(),
            Token::While => "`while`".to_string(),
            Token::Do => "`do`".to_string(),
            Token::GateH => "`H`".to_string(),
            Token::GateT => "`T`".to_string(),
            Token::GateX => "`X`".to_string(),
            Token::GateY => "`Y`".to_string(),
            Token::GateZ => "`Z`".to_string(),
            Token::GateCNot => "`CNot`".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

fn keyword(word: &str) -> Option<Token> {
    Some(match word {
        "qubits" => Token::Qubits,
        "skip" => Token::Skip,
        "if" => Token::If,
        "then" => Token::Then,
        "else" => Token::Else,
        "while" => Token::While,
        "do" => Token::Do,
        "H" => Token::GateH,
        "T" => Token::GateT,
        "X" => Token::GateX,
        "Y" => Token::GateY,
        "Z" => Token::GateZ,
        "CNot" => Token::GateCNot,
        _ => return None,
    })
}

pub fn tokenize(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
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
            '/' => {
                chars.next();
                if chars.peek() == Some(&'/') {
                    let mut saw_newline = false;
                    for c in chars.by_ref() {
                        if c == '\n' {
                            saw_newline = true;
                            break;
                        }
                    }
                    if saw_newline {
                        line += 1;
                        col = 1;
                    }
                } else {
                    return Err(ParseError::Syntax {
                        line: pos.line,
                        col: pos.col,
                        expected: "`//` comment".to_string(),
                        found: "`/`".to_string(),
                    });
                }
            }
            '{' | '}' | '(' | ')' | ',' | ';' => {
                chars.next();
                col += 1;
                let token = match c {
                    '{' => Token::LBrace,
                    '}' => Token::RBrace,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    ',' => Token::Comma,
                    _ => Token::Semi,
                };
                tokens.push(Spanned { token, pos });
            }
            c if c.is_alphabetic() => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let token = keyword(&word).unwrap_or(Token::Ident(word));
                tokens.push(Spanned { token, pos });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    expected: "statement, identifier or punctuation".to_string(),
                    found: format!("`{other}`"),
                });
            }
        }
    }
    tokens.push(Spanned { token: Token::Eof, pos: Pos { line, col } });
    Ok(tokens)
}
