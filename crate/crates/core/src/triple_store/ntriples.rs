//! N-Triples subset: iris and literals with an optional datatype. Blank nodes
//! and language tags are rejected.

use std::fmt::Write as _;

use super::{Store, StoreError, Term, Triple};

/// One triple per line in canonical order, each line ending in ` .\n`.
pub fn serialize(store: &Store) -> String {
    let mut out = String::new();
    for t in store.iter() {
        let _ = writeln!(
            out,
            "{} {} {} .",
            format_term(&t.subject),
            format_term(&t.predicate),
            format_term(&t.object)
        );
    }
    out
}

pub(super) fn format_term(term: &Term) -> String {
    match term {
        Term::Iri(v) => format!("<{v}>"),
        Term::Literal { value, datatype } => {
            let mut s = String::with_capacity(value.len() + 2);
            s.push('"');
            for c in value.chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\n' => s.push_str("\\n"),
                    '\r' => s.push_str("\\r"),
                    '\t' => s.push_str("\\t"),
                    c if c.is_control() => {
                        let _ = write!(s, "\\u{:04X}", c as u32);
                    }
                    c => s.push(c),
                }
            }
            s.push('"');
            if let Some(dt) = datatype {
                let _ = write!(s, "^^<{dt}>");
            }
            s
        }
    }
}

pub fn parse(text: &str) -> Result<Store, StoreError> {
    let mut store = Store::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cursor = Cursor {
            chars: line.chars().collect(),
            pos: 0,
            line: line_no,
        };
        let subject = cursor.term()?;
        let predicate = cursor.term()?;
        let object = cursor.term()?;
        cursor.skip_ws();
        if cursor.peek() != Some('.') {
            return Err(cursor.syntax("expected '.' after object"));
        }
        cursor.pos += 1;
        cursor.skip_ws();
        if let Some(c) = cursor.peek() {
            if c != '#' {
                return Err(cursor.syntax("unexpected content after '.'"));
            }
        }
        let triple = Triple::new(subject, predicate, object).map_err(|e| StoreError::Syntax {
            line: line_no,
            message: e.to_string(),
        })?;
        store.insert(triple)?;
    }
    Ok(store)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn syntax(&self, message: &str) -> StoreError {
        StoreError::Syntax {
            line: self.line,
            message: format!("{message} (column {})", self.pos + 1),
        }
    }

    fn term(&mut self) -> Result<Term, StoreError> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('"') => self.literal(),
            Some('_') => {
                let start = self.pos;
                while self.peek().is_some_and(|c| !c.is_whitespace()) {
                    self.pos += 1;
                }
                Err(StoreError::UnsupportedTerm {
                    line: self.line,
                    term: self.chars[start..self.pos].iter().collect(),
                })
            }
            Some(_) => Err(self.syntax("expected '<' or '\"'")),
            None => Err(self.syntax("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, StoreError> {
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '>' {
                let value: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                super::check_iri(&value).map_err(|e| self.syntax(&e.to_string()))?;
                return Ok(value);
            }
            self.pos += 1;
        }
        Err(self.syntax("unterminated iri"))
    }

    fn literal(&mut self) -> Result<Term, StoreError> {
        self.pos += 1;
        let mut value = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(self.syntax("unterminated literal"));
            };
            self.pos += 1;
            match c {
                '"' => break,
                '\\' => value.push(self.escape()?),
                c => value.push(c),
            }
        }
        match self.peek() {
            Some('^') => {
                if self.chars.get(self.pos + 1) != Some(&'^') {
                    return Err(self.syntax("expected '^^'"));
                }
                self.pos += 2;
                if self.peek() != Some('<') {
                    return Err(self.syntax("expected datatype iri"));
                }
                let dt = self.iri()?;
                Ok(Term::Literal {
                    value,
                    datatype: Some(dt),
                })
            }
            Some('@') => {
                let start = self.pos;
                while self.peek().is_some_and(|c| !c.is_whitespace()) {
                    self.pos += 1;
                }
                Err(StoreError::UnsupportedTerm {
                    line: self.line,
                    term: format!(
                        "\"{value}\"{}",
                        self.chars[start..self.pos].iter().collect::<String>()
                    ),
                })
            }
            _ => Ok(Term::Literal {
                value,
                datatype: None,
            }),
        }
    }

    fn escape(&mut self) -> Result<char, StoreError> {
        let Some(c) = self.peek() else {
            return Err(self.syntax("dangling escape"));
        };
        self.pos += 1;
        Ok(match c {
            't' => '\t',
            'b' => '\u{8}',
            'n' => '\n',
            'r' => '\r',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            'u' | 'U' => {
                let len = if c == 'u' { 4 } else { 8 };
                if self.pos + len > self.chars.len() {
                    return Err(self.syntax("truncated unicode escape"));
                }
                let hex: String = self.chars[self.pos..self.pos + len].iter().collect();
                self.pos += len;
                u32::from_str_radix(&hex, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| self.syntax("invalid unicode escape"))?
            }
            _ => return Err(self.syntax("unknown escape")),
        })
    }
}
