//! Tokens of the model text format.
//!
//! A line is a sequence of items separated by whitespace. An item is either
//! a bare word, a double-quoted string, or `key=value` where the value may
//! also be a bracketed, comma-separated list.

use std::fmt::Write as _;

/// Characters that force quoting.
fn is_special(c: char) -> bool {
    c.is_whitespace() || c.is_control() || matches!(c, '"' | '\\' | '=' | '[' | ']' | ',' | '#')
}

pub(crate) fn is_bare(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(is_special)
}

/// Writes `s` bare when that is unambiguous, quoted otherwise.
pub(crate) fn push_word(out: &mut String, s: &str) {
    if is_bare(s) {
        out.push_str(s);
        return;
    }
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Atom {
    pub text: String,
    pub quoted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Value {
    Atom(Atom),
    List(Vec<Atom>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Item {
    Word(Atom),
    Pair(String, Value),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Lexer<'_> {
    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn atom(&mut self) -> Result<Atom, String> {
        if self.peek() == Some('"') {
            self.chars.next();
            let mut text = String::new();
            loop {
                match self.chars.next() {
                    None => return Err("unterminated string".into()),
                    Some((_, '"')) => break,
                    Some((_, '\\')) => match self.chars.next() {
                        Some((_, '"')) => text.push('"'),
                        Some((_, '\\')) => text.push('\\'),
                        Some((_, 'n')) => text.push('\n'),
                        Some((_, 'r')) => text.push('\r'),
                        Some((_, 't')) => text.push('\t'),
                        Some((_, 'u')) => text.push(self.unicode_escape()?),
                        _ => return Err("bad escape sequence".into()),
                    },
                    Some((_, c)) => text.push(c),
                }
            }
            return Ok(Atom { text, quoted: true });
        }
        let mut text = String::new();
        while let Some((_, c)) = self.chars.next_if(|&(_, c)| !is_special(c)) {
            text.push(c);
        }
        if text.is_empty() {
            return Err(match self.peek() {
                Some(c) => format!("unexpected '{c}'"),
                None => "unexpected end of line".into(),
            });
        }
        Ok(Atom { text, quoted: false })
    }

    fn unicode_escape(&mut self) -> Result<char, String> {
        if self.chars.next().map(|x| x.1) != Some('{') {
            return Err("bad unicode escape".into());
        }
        let mut hex = String::new();
        loop {
            match self.chars.next() {
                Some((_, '}')) => break,
                Some((_, c)) if c.is_ascii_hexdigit() && hex.len() < 6 => hex.push(c),
                _ => return Err("bad unicode escape".into()),
            }
        }
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| "bad unicode escape".to_string())
    }

    fn value(&mut self) -> Result<Value, String> {
        if self.peek() != Some('[') {
            return self.atom().map(Value::Atom);
        }
        self.chars.next();
        let mut items = Vec::new();
        if self.peek() == Some(']') {
            self.chars.next();
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.atom()?);
            match self.chars.next() {
                Some((_, ',')) => continue,
                Some((_, ']')) => return Ok(Value::List(items)),
                Some((_, c)) => return Err(format!("unexpected '{c}' in list")),
                None => return Err("unterminated list".into()),
            }
        }
    }
}

pub(crate) fn tokenize(line: &str) -> Result<Vec<Item>, String> {
    let mut lx = Lexer {
        chars: line.char_indices().peekable(),
    };
    let mut items = Vec::new();
    loop {
        lx.skip_ws();
        if lx.peek().is_none() {
            return Ok(items);
        }
        let head = lx.atom()?;
        if lx.peek() == Some('=') {
            lx.chars.next();
            let v = lx.value()?;
            items.push(Item::Pair(head.text, v));
        } else {
            items.push(Item::Word(head));
        }
        match lx.peek() {
            None => {}
            Some(c) if c.is_whitespace() => {}
            Some(c) => return Err(format!("unexpected '{c}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &str) -> String {
        let mut out = String::new();
        push_word(&mut out, s);
        out
    }

    #[test]
    fn quoting_round_trips() {
        for s in [
            "plain",
            "",
            "two words",
            "a=b",
            "say \"hi\"",
            "back\\slash",
            "tab\tnew\nline",
            "[x,y]",
            "#tag",
            "\u{1}",
        ] {
            let items = tokenize(&format!("k={}", word(s))).unwrap();
            assert_eq!(
                items,
                vec![Item::Pair(
                    "k".into(),
                    Value::Atom(Atom {
                        text: s.into(),
                        quoted: !is_bare(s)
                    })
                )]
            );
        }
    }

    #[test]
    fn items_and_lists() {
        let items = tokenize(r#"entity "3D Coordinates" xyz:1 tags=[a,"b c"] empty=[]"#).unwrap();
        assert_eq!(items.len(), 5);
        assert!(
            matches!(&items[3], Item::Pair(k, Value::List(v)) if k == "tags" && v.len() == 2 && v[1].text == "b c")
        );
        assert!(matches!(&items[4], Item::Pair(_, Value::List(v)) if v.is_empty()));
    }

    #[test]
    fn malformed_lines() {
        assert!(tokenize("k=\"open").is_err());
        assert!(tokenize("k=[a,b").is_err());
        assert!(tokenize("k=").is_err());
        assert!(tokenize("\"a\"b").is_err());
        assert!(tokenize(r#"k="\q""#).is_err());
    }
}
