//! Lexing for the indentation-structured text formats (models, catalogs,
//! scenarios, taxonomies).

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

impl TextError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        TextError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub number: usize,
    pub indent: usize,
    pub tokens: Vec<String>,
}

impl Line {
    pub fn keyword(&self) -> &str {
        &self.tokens[0]
    }

    pub fn error(&self, message: impl Into<String>) -> TextError {
        TextError::new(self.number, message)
    }

    /// Second token, required.
    pub fn name(&self) -> Result<&str, TextError> {
        match self.tokens.get(1) {
            Some(n) if !n.contains('=') => Ok(n),
            _ => Err(self.error(format!("`{}` needs a name", self.keyword()))),
        }
    }

    /// `key=value` tokens after `skip` leading tokens. Duplicated keys and bare
    /// tokens are errors.
    pub fn options(&self, skip: usize) -> Result<Options, TextError> {
        let mut map = BTreeMap::new();
        for tok in &self.tokens[skip.min(self.tokens.len())..] {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(self.error(format!("expected key=value, found {tok:?}")));
            };
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(self.error(format!("duplicate key {k:?}")));
            }
        }
        Ok(Options {
            line: self.number,
            map,
        })
    }
}

/// `key=value` pairs of one line; take what you need, then call [`Options::finish`].
#[derive(Debug)]
pub struct Options {
    line: usize,
    map: BTreeMap<String, String>,
}

impl Options {
    pub fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    pub fn require(&mut self, key: &str) -> Result<String, TextError> {
        self.take(key)
            .ok_or_else(|| TextError::new(self.line, format!("missing {key}=")))
    }

    pub fn number(&mut self, key: &str) -> Result<Option<f64>, TextError> {
        self.take(key)
            .map(|v| parse_number(self.line, key, &v))
            .transpose()
    }

    /// Remaining keys, for formats that keep unknown keys as opaque text.
    pub fn rest(self) -> BTreeMap<String, String> {
        self.map
    }

    pub fn finish(self) -> Result<(), TextError> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(TextError::new(self.line, format!("unknown key {k:?}"))),
        }
    }
}

pub fn parse_number(line: usize, key: &str, value: &str) -> Result<f64, TextError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(TextError::new(
            line,
            format!("{key}: {value:?} is not a finite number"),
        )),
    }
}

/// Splits on whitespace; double quotes group text (and are removed).
pub fn tokenize(text: &str, line: usize) -> Result<Vec<String>, TextError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut in_token = false;
    let mut quoted = false;
    for c in text.chars() {
        if quoted {
            if c == '"' {
                quoted = false;
            } else {
                current.push(c);
            }
        } else if c == '"' {
            quoted = true;
            in_token = true;
        } else if c.is_whitespace() {
            if in_token {
                tokens.push(std::mem::take(&mut current));
                in_token = false;
            }
        } else {
            current.push(c);
            in_token = true;
        }
    }
    if quoted {
        return Err(TextError::new(line, "unterminated quote"));
    }
    if in_token {
        tokens.push(current);
    }
    Ok(tokens)
}

/// Non-blank, non-comment lines with their indentation (tabs count as four).
pub fn lines(text: &str) -> Result<Vec<Line>, TextError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw[..raw.len() - trimmed.len()]
            .chars()
            .map(|c| if c == '\t' { 4 } else { 1 })
            .sum();
        let tokens = tokenize(trimmed, idx + 1)?;
        out.push(Line {
            number: idx + 1,
            indent,
            tokens,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub line: Line,
    pub children: Vec<Node>,
}

/// Builds the block tree from indentation. A dedent must return to the
/// indentation of an enclosing block.
pub fn tree(text: &str) -> Result<Vec<Node>, TextError> {
    let lines = lines(text)?;
    let mut pos = 0;
    let roots = block(&lines, &mut pos, lines.first().map_or(0, |l| l.indent))?;
    if let Some(l) = lines.get(pos) {
        return Err(l.error("inconsistent indentation"));
    }
    Ok(roots)
}

fn block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Vec<Node>, TextError> {
    let mut nodes = Vec::new();
    while let Some(line) = lines.get(*pos) {
        if line.indent < indent {
            break;
        }
        if line.indent > indent {
            return Err(line.error("unexpected indentation"));
        }
        *pos += 1;
        let children = match lines.get(*pos) {
            Some(next) if next.indent > indent => block(lines, pos, next.indent)?,
            _ => Vec::new(),
        };
        nodes.push(Node {
            line: line.clone(),
            children,
        });
    }
    Ok(nodes)
}

/// Element names: non-empty, no whitespace or control characters, none of
/// `. , = # ( ) " /`.
pub fn check_name(line: &Line, what: &str, name: &str) -> Result<(), TextError> {
    if valid_name(name) {
        Ok(())
    } else {
        Err(line.error(format!("invalid {what} name {name:?}")))
    }
}

pub fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.chars().any(|c| {
            c.is_whitespace()
                || c.is_control()
                || matches!(c, '.' | ',' | '=' | '#' | '(' | ')' | '"' | '/')
        })
}
