//! Textual process-definition format: parsing and canonical serialization.
//!
//! A file is `process <ident> { <decl>* }` where each declaration is one of
//! `start x;`, `end x;`, `task x;`, `gateway <kind> x;`, or an edge
//! `a -> b [label];` (label optional). Comments run from `#` to end of line.

use std::fmt;

use thiserror::Error;

use crate::model::{
    build_process, Edge, GatewayKind, NodeId, NodeKind, ProcessDefinition, ValidationReport,
};

/// 1-based position in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Syntax error with the position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: expected {}, found {}",
            self.span, self.expected, self.found
        )
    }
}

/// Why a text did not produce a definition.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    #[error("{} syntax error(s), first: {}", .0.len(), .0[0])]
    Syntax(Vec<ParseError>),
    #[error("definition is structurally invalid ({} violations)", .0.violations.len())]
    Invalid(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Number(String),
    Label(String),
    Arrow,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Number(n) => format!("'{n}'"),
            Tok::Label(_) => "label".into(),
            Tok::Arrow => "'->'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Semi => "';'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    span: SourceSpan,
}

struct Lexer<'a> {
    rest: std::str::Chars<'a>,
    line: u32,
    column: u32,
    last: SourceSpan,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            rest: src.chars(),
            line: 1,
            column: 1,
            last: SourceSpan { line: 1, column: 1 },
        }
    }

    fn peek(&self) -> Option<char> {
        self.rest.clone().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.rest.next()?;
        self.last = SourceSpan { line: self.line, column: self.column };
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> SourceSpan {
        SourceSpan { line: self.line, column: self.column }
    }
}

/// Tokenizes the whole input. Characters outside the grammar are reported and
/// skipped so the parser can keep going.
fn lex(src: &str, errors: &mut Vec<ParseError>) -> Vec<Spanned> {
    let mut lx = Lexer::new(src);
    let mut out = Vec::new();
    loop {
        // Skip whitespace and comments.
        loop {
            match lx.peek() {
                Some(c) if c.is_whitespace() => {
                    lx.bump();
                }
                Some('#') => {
                    while let Some(c) = lx.peek() {
                        if c == '\n' {
                            break;
                        }
                        lx.bump();
                    }
                }
                _ => break,
            }
        }
        let span = lx.here();
        let Some(c) = lx.peek() else {
            // Clamp end-of-input to the last consumed character so error
            // spans always point inside the text.
            out.push(Spanned { tok: Tok::Eof, span: lx.last });
            return out;
        };
        match c {
            '{' => {
                lx.bump();
                out.push(Spanned { tok: Tok::LBrace, span });
            }
            '}' => {
                lx.bump();
                out.push(Spanned { tok: Tok::RBrace, span });
            }
            '(' => {
                lx.bump();
                out.push(Spanned { tok: Tok::LParen, span });
            }
            ')' => {
                lx.bump();
                out.push(Spanned { tok: Tok::RParen, span });
            }
            ';' => {
                lx.bump();
                out.push(Spanned { tok: Tok::Semi, span });
            }
            '[' => {
                lx.bump();
                out.push(Spanned { tok: Tok::LBracket, span });
                // Raw label mode: everything up to ']' on the same line.
                let label_span = lx.here();
                let mut label = String::new();
                loop {
                    match lx.peek() {
                        Some(']') => {
                            let close = lx.here();
                            lx.bump();
                            out.push(Spanned { tok: Tok::Label(label), span: label_span });
                            out.push(Spanned { tok: Tok::RBracket, span: close });
                            break;
                        }
                        Some('\n') | None => {
                            errors.push(ParseError {
                                span: label_span,
                                expected: "']'".into(),
                                found: "end of line".into(),
                            });
                            out.push(Spanned { tok: Tok::Label(label), span: label_span });
                            break;
                        }
                        Some(ch) => {
                            label.push(ch);
                            lx.bump();
                        }
                    }
                }
            }
            '-' => {
                lx.bump();
                if lx.peek() == Some('>') {
                    lx.bump();
                    out.push(Spanned { tok: Tok::Arrow, span });
                } else {
                    errors.push(ParseError {
                        span,
                        expected: "'->'".into(),
                        found: "'-'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(ch) = lx.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        word.push(ch);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Word(word), span });
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while let Some(ch) = lx.peek() {
                    if ch.is_ascii_digit() {
                        num.push(ch);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Number(num), span });
            }
            other => {
                lx.bump();
                errors.push(ParseError {
                    span,
                    expected: "a declaration token".into(),
                    found: format!("'{other}'"),
                });
            }
        }
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    errors: Vec<ParseError>,
    nodes: Vec<(NodeId, NodeKind)>,
    edges: Vec<Edge>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.peek().clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&mut self, at: &Spanned, expected: &str) -> ParseError {
        ParseError {
            span: at.span,
            expected: expected.into(),
            found: at.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Spanned, ParseError> {
        let t = self.peek().clone();
        if t.tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error_at(&t, expected))
        }
    }

    fn expect_ident(&mut self) -> Result<NodeId, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Word(w) => match NodeId::new(w.clone()) {
                Ok(id) => {
                    self.bump();
                    Ok(id)
                }
                Err(_) => Err(self.error_at(&t, "an identifier (not a keyword)")),
            },
            _ => Err(self.error_at(&t, "an identifier")),
        }
    }

    /// Skips to just past the next ';', or stops before '}' / end of input.
    fn synchronize(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn gateway_kind(&mut self) -> Result<GatewayKind, ParseError> {
        let t = self.peek().clone();
        let Tok::Word(word) = &t.tok else {
            return Err(self.error_at(&t, "a gateway kind"));
        };
        let kind = match word.as_str() {
            "and_split" => GatewayKind::AndSplit,
            "and_join" => GatewayKind::AndJoin,
            "xor_split" => GatewayKind::XorSplit,
            "xor_join" => GatewayKind::XorJoin,
            "or_split" => GatewayKind::OrSplit,
            "or_join" => GatewayKind::OrJoin,
            "multi_merge" => GatewayKind::MultiMerge,
            "discriminator" => GatewayKind::Discriminator,
            "n_of_m" => {
                self.bump();
                self.expect(Tok::LParen, "'('")?;
                let t = self.peek().clone();
                let Tok::Number(num) = &t.tok else {
                    return Err(self.error_at(&t, "a positive integer"));
                };
                let n: u32 = num
                    .parse()
                    .map_err(|_| self.error_at(&t, "a positive integer"))?;
                self.bump();
                self.expect(Tok::RParen, "')'")?;
                return Ok(GatewayKind::NOfM(n));
            }
            _ => return Err(self.error_at(&t, "a gateway kind")),
        };
        self.bump();
        Ok(kind)
    }

    fn declaration(&mut self) -> Result<(), ParseError> {
        let t = self.peek().clone();
        let keyword = match &t.tok {
            Tok::Word(w) => w.clone(),
            _ => return Err(self.error_at(&t, "a declaration")),
        };
        match keyword.as_str() {
            "start" | "end" | "task" => {
                self.bump();
                let id = self.expect_ident()?;
                self.expect(Tok::Semi, "';'")?;
                let kind = match keyword.as_str() {
                    "start" => NodeKind::Start,
                    "end" => NodeKind::End,
                    _ => NodeKind::Task,
                };
                self.nodes.push((id, kind));
            }
            "gateway" => {
                self.bump();
                let kind = self.gateway_kind()?;
                let id = self.expect_ident()?;
                self.expect(Tok::Semi, "';'")?;
                self.nodes.push((id, NodeKind::Gateway(kind)));
            }
            _ => {
                let from = self.expect_ident()?;
                self.expect(Tok::Arrow, "'->'")?;
                let to = self.expect_ident()?;
                let mut label = None;
                if self.peek().tok == Tok::LBracket {
                    self.bump();
                    let t = self.peek().clone();
                    if let Tok::Label(text) = &t.tok {
                        label = Some(text.clone());
                        self.bump();
                        self.expect(Tok::RBracket, "']'")?;
                    } else {
                        return Err(self.error_at(&t, "a label"));
                    }
                }
                self.expect(Tok::Semi, "';'")?;
                self.edges.push(Edge { from, to, label });
            }
        }
        Ok(())
    }

    fn file(&mut self) -> Option<String> {
        let header = (|| {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Word(w) if w == "process" => {
                    self.bump();
                }
                _ => return Err(self.error_at(&t, "'process'")),
            }
            let name = self.expect_ident()?;
            self.expect(Tok::LBrace, "'{'")?;
            Ok(name)
        })();
        let name = match header {
            Ok(name) => name,
            Err(e) => {
                self.errors.push(e);
                return None;
            }
        };
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Eof => {
                    let t = self.peek().clone();
                    let e = self.error_at(&t, "'}'");
                    self.errors.push(e);
                    break;
                }
                _ => {
                    if let Err(e) = self.declaration() {
                        self.errors.push(e);
                        self.synchronize();
                    }
                }
            }
        }
        if self.peek().tok != Tok::Eof {
            let t = self.peek().clone();
            let e = self.error_at(&t, "end of input");
            self.errors.push(e);
        }
        Some(name.as_str().to_owned())
    }
}

/// Parses a definition, reporting either every syntax error found or the
/// structural violations of a syntactically well-formed text.
pub fn parse(text: &str) -> Result<ProcessDefinition, ParseFailure> {
    let mut lex_errors = Vec::new();
    let tokens = lex(text, &mut lex_errors);
    let mut parser = Parser {
        tokens,
        pos: 0,
        errors: lex_errors,
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let name = parser.file();
    if !parser.errors.is_empty() {
        return Err(ParseFailure::Syntax(parser.errors));
    }
    let name = name.expect("header parsed");
    build_process(name, parser.nodes, parser.edges).map_err(ParseFailure::Invalid)
}

/// Canonical text for a definition: one declaration per line, LF endings.
/// Feeding the output back through [`parse`] reproduces the definition.
pub fn serialize(def: &ProcessDefinition) -> String {
    let mut out = String::new();
    out.push_str(&format!("process {} {{\n", def.name()));
    for (id, kind) in def.nodes() {
        let line = match kind {
            NodeKind::Start => format!("  start {id};\n"),
            NodeKind::End => format!("  end {id};\n"),
            NodeKind::Task => format!("  task {id};\n"),
            NodeKind::Gateway(g) => format!("  gateway {} {id};\n", g.keyword()),
        };
        out.push_str(&line);
    }
    for edge in def.edges() {
        match &edge.label {
            Some(label) => out.push_str(&format!("  {} -> {} [{}];\n", edge.from, edge.to, label)),
            None => out.push_str(&format!("  {} -> {};\n", edge.from, edge.to)),
        }
    }
    out.push_str("}\n");
    out
}
