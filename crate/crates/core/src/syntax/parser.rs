//! Recursive-descent parser for the `.qpl` grammar:
//!
//! ```text
//! program  := "qubits" ident ("," ident)* ";" stmts
//! stmts    := stmt (";" stmt)* [";"]
//! stmt     := "skip" | gate | cond | loop | "{" stmts "}"
//! gate     := ("H"|"T"|"X"|"Y"|"Z") "(" ident ")" | "CNot" "(" ident "," ident ")"
//! cond     := "if" ident "then" "{" stmts "}" "else" "{" stmts "}"
//! loop     := "while" ident "do" "{" stmts "}"
//! ident    := letter (letter|digit|"_")*
//! ```
//!
//! A statement list folds to the right: `a;b;c` parses as `Seq(a, Seq(b, c))`.

use super::lexer::{tokenize, Spanned, Token};
use super::{Command, ParseError, Program, QubitId};

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0, qubits: Vec::new() };
    parser.program()
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    qubits: Vec<QubitId>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let spanned = self.peek();
        ParseError::Syntax {
            line: spanned.pos.line,
            col: spanned.pos.col,
            expected: expected.to_string(),
            found: spanned.token.describe(),
        }
    }

    fn expect(&mut self, token: Token, expected: &str) -> Result<Spanned, ParseError> {
        if self.peek().token == token {
            Ok(self.advance())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<(String, Spanned), ParseError> {
        match self.peek().token.clone() {
            Token::Ident(name) => {
                let spanned = self.advance();
                Ok((name, spanned))
            }
            _ => Err(self.error_here(expected)),
        }
    }

    fn qubit_ref(&mut self) -> Result<QubitId, ParseError> {
        let (name, spanned) = self.ident("qubit name")?;
        match self.qubits.iter().find(|q| q.name == name) {
            Some(q) => Ok(q.clone()),
            None => Err(ParseError::UndeclaredQubit {
                name,
                line: spanned.pos.line,
                col: spanned.pos.col,
            }),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        self.expect(Token::Qubits, "`qubits` declaration")?;
        loop {
            let (name, spanned) = self.ident("qubit name")?;
            if self.qubits.iter().any(|q| q.name == name) {
                return Err(ParseError::DuplicateQubit {
                    name,
                    line: spanned.pos.line,
                    col: spanned.pos.col,
                });
            }
            let index = self.qubits.len();
            self.qubits.push(QubitId { name, index });
            match self.peek().token {
                Token::Comma => {
                    self.advance();
                }
                _ => break,
            }
        }
        self.expect(Token::Semi, "`;` after qubit declaration")?;
        let body = self.stmts(Token::Eof)?;
        self.expect(Token::Eof, "end of program")?;
        Ok(Program { qubits: std::mem::take(&mut self.qubits), body })
    }

    /// Parse a statement list terminated by `closer`, folding to the right.
    fn stmts(&mut self, closer: Token) -> Result<Command, ParseError> {
        let mut items = vec![self.stmt()?];
        while self.peek().token == Token::Semi {
            self.advance();
            if self.peek().token == closer {
                break; // optional trailing `;`
            }
            items.push(self.stmt()?);
        }
        let mut cmd = items.pop().expect("at least one statement");
        while let Some(prev) = items.pop() {
            cmd = Command::Seq(Box::new(prev), Box::new(cmd));
        }
        Ok(cmd)
    }

    fn block(&mut self) -> Result<Command, ParseError> {
        self.expect(Token::LBrace, "`{`")?;
        let body = self.stmts(Token::RBrace)?;
        self.expect(Token::RBrace, "`}`")?;
        Ok(body)
    }

    fn unary_gate(&mut self, make: fn(QubitId) -> Command) -> Result<Command, ParseError> {
        self.expect(Token::LParen, "`(`")?;
        let q = self.qubit_ref()?;
        self.expect(Token::RParen, "`)`")?;
        Ok(make(q))
    }

    fn stmt(&mut self) -> Result<Command, ParseError> {
        let spanned = self.peek().clone();
        match spanned.token {
            Token::Skip => {
                self.advance();
                Ok(Command::Skip)
            }
            Token::GateH => {
                self.advance();
                self.unary_gate(Command::H)
            }
            Token::GateT => {
                self.advance();
                self.unary_gate(Command::T)
            }
            Token::GateX => {
                self.advance();
                self.unary_gate(Command::X)
            }
            Token::GateY => {
                self.advance();
                self.unary_gate(Command::Y)
            }
            Token::GateZ => {
                self.advance();
                self.unary_gate(Command::Z)
            }
            Token::GateCNot => {
                self.advance();
                self.expect(Token::LParen, "`(`")?;
                let control = self.qubit_ref()?;
                self.expect(Token::Comma, "`,`")?;
                let target = self.qubit_ref()?;
                self.expect(Token::RParen, "`)`")?;
                if control == target {
                    return Err(ParseError::SelfTargetCNot {
                        line: spanned.pos.line,
                        col: spanned.pos.col,
                    });
                }
                Ok(Command::CNot { control, target })
            }
            Token::If => {
                self.advance();
                let cond = self.qubit_ref()?;
                self.expect(Token::Then, "`then`")?;
                let then_cmd = self.block()?;
                self.expect(Token::Else, "`else`")?;
                let else_cmd = self.block()?;
                Ok(Command::If { cond, then_cmd: Box::new(then_cmd), else_cmd: Box::new(else_cmd) })
            }
            Token::While => {
                self.advance();
                let cond = self.qubit_ref()?;
                self.expect(Token::Do, "`do`")?;
                let body = self.block()?;
                Ok(Command::While { cond, body: Box::new(body) })
            }
            Token::LBrace => self.block(),
            _ => Err(self.error_here("statement")),
        }
    }
}
