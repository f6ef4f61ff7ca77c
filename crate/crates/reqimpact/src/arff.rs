//! A strict checker for the ARFF subset WEKA reads: a `@RELATION` line,
//! one or more `@ATTRIBUTE` declarations, `@DATA`, then dense or sparse
//! instances whose values match the declared types.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeType {
    Numeric,
    String,
    Date,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArffSummary {
    pub relation: String,
    pub attributes: Vec<Attribute>,
    pub instances: usize,
    /// Instances holding at least one `?`.
    pub with_missing: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ArffSyntaxError {
    pub line: usize,
    pub message: String,
}

/// Splits `s` into tokens separated by `sep` chars or whitespace, honouring
/// single and double quotes with backslash escapes. Returns the tokens and
/// whether each one was quoted.
fn tokens(s: &str, sep: &[char]) -> Result<Vec<(String, bool)>, String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&c) = chars.peek() else { break };
        if sep.contains(&c) {
            return Err(format!("unexpected {c:?}"));
        }
        if c == '\'' || c == '"' {
            chars.next();
            let mut tok = String::new();
            let mut closed = false;
            while let Some(ch) = chars.next() {
                match ch {
                    '\\' => tok.push(chars.next().ok_or("dangling escape")?),
                    q if q == c => {
                        closed = true;
                        break;
                    }
                    other => tok.push(other),
                }
            }
            if !closed {
                return Err("unterminated quote".into());
            }
            out.push((tok, true));
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || sep.contains(&ch) {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            out.push((tok, false));
        }
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => break,
            Some(ch) if sep.contains(&ch) => {
                if chars.clone().all(char::is_whitespace) {
                    return Err("trailing separator".into());
                }
            }
            Some(ch) => return Err(format!("expected separator before {ch:?}")),
        }
    }
    Ok(out)
}

/// Splits a header line into its keyword and the remainder.
fn keyword(line: &str) -> (String, &str) {
    let end = line.find(char::is_whitespace).unwrap_or(line.len());
    (line[..end].to_ascii_lowercase(), line[end..].trim())
}

/// Reads one (possibly quoted) name and returns it with the remainder.
fn name_and_rest(s: &str) -> Result<(String, &str), String> {
    let s = s.trim_start();
    let first = s.chars().next().ok_or("missing name")?;
    if first == '\'' || first == '"' {
        let mut escaped = false;
        for (i, ch) in s.char_indices().skip(1) {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == first {
                let toks = tokens(&s[..=i], &[])?;
                return Ok((toks[0].0.clone(), &s[i + 1..]));
            }
        }
        Err("unterminated quoted name".into())
    } else {
        if matches!(first, '{' | '}' | ',' | '%') {
            return Err(format!("name cannot start with {first:?}"));
        }
        let end = s.find(char::is_whitespace).unwrap_or(s.len());
        Ok((s[..end].to_string(), &s[end..]))
    }
}

fn attribute_type(spec: &str) -> Result<AttributeType, String> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix('{') {
        let inner = inner.strip_suffix('}').ok_or("unterminated nominal list")?;
        let values: Vec<String> = tokens(inner, &[','])?.into_iter().map(|t| t.0).collect();
        if values.is_empty() {
            return Err("empty nominal list".into());
        }
        return Ok(AttributeType::Nominal(values));
    }
    let (kw, rest) = keyword(spec);
    match kw.as_str() {
        "numeric" | "real" | "integer" if rest.is_empty() => Ok(AttributeType::Numeric),
        "string" if rest.is_empty() => Ok(AttributeType::String),
        "date" => Ok(AttributeType::Date),
        "" => Err("missing attribute type".into()),
        _ => Err(format!("unknown attribute type {spec:?}")),
    }
}

fn check_value(attr: &Attribute, value: &str, quoted: bool) -> Result<bool, String> {
    if value == "?" && !quoted {
        return Ok(true);
    }
    match &attr.kind {
        AttributeType::Numeric => match value.parse::<f64>() {
            Ok(v) if v.is_finite() && !quoted => Ok(false),
            _ => Err(format!("{value:?} is not numeric for {}", attr.name)),
        },
        AttributeType::Nominal(vals) => {
            if vals.iter().any(|v| v == value) {
                Ok(false)
            } else {
                Err(format!("{value:?} is not a declared value of {}", attr.name))
            }
        }
        AttributeType::String | AttributeType::Date => Ok(false),
    }
}

fn instance(line: &str, attrs: &[Attribute]) -> Result<bool, String> {
    if let Some(inner) = line.strip_prefix('{') {
        let inner = inner.strip_suffix('}').ok_or("unterminated sparse instance")?;
        let mut missing = false;
        let mut last: Option<usize> = None;
        if inner.trim().is_empty() {
            return Ok(false);
        }
        for entry in inner.split(',') {
            let entry = entry.trim();
            let (idx, value) = entry.split_once(char::is_whitespace).ok_or("sparse entry needs index and value")?;
            let idx: usize = idx.parse().map_err(|_| format!("bad sparse index {idx:?}"))?;
            let attr = attrs.get(idx).ok_or(format!("sparse index {idx} out of range"))?;
            if last.is_some_and(|l| l >= idx) {
                return Err("sparse indices must increase".into());
            }
            last = Some(idx);
            let toks = tokens(value, &[])?;
            if toks.len() != 1 {
                return Err("sparse entry holds more than one value".into());
            }
            missing |= check_value(attr, &toks[0].0, toks[0].1)?;
        }
        return Ok(missing);
    }
    let values = tokens(line, &[','])?;
    if values.len() != attrs.len() {
        return Err(format!("expected {} values, found {}", attrs.len(), values.len()));
    }
    let mut missing = false;
    for (attr, (v, quoted)) in attrs.iter().zip(&values) {
        missing |= check_value(attr, v, *quoted)?;
    }
    Ok(missing)
}

pub fn check_arff(text: &str) -> Result<ArffSummary, ArffSyntaxError> {
    enum State {
        Start,
        Header,
        Data,
    }
    let mut state = State::Start;
    let mut relation = String::new();
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut instances = 0;
    let mut with_missing = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| ArffSyntaxError { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        match state {
            State::Start => {
                let (kw, rest) = keyword(line);
                if kw != "@relation" {
                    return Err(err("expected @RELATION".into()));
                }
                let (name, tail) = name_and_rest(rest).map_err(err)?;
                if !tail.trim().is_empty() {
                    return Err(err("unexpected text after relation name".into()));
                }
                relation = name;
                state = State::Header;
            }
            State::Header => {
                let (kw, rest) = keyword(line);
                match kw.as_str() {
                    "@attribute" => {
                        let (name, tail) = name_and_rest(rest).map_err(err)?;
                        if attributes.iter().any(|a| a.name == name) {
                            return Err(err(format!("attribute {name} declared twice")));
                        }
                        let kind = attribute_type(tail).map_err(err)?;
                        attributes.push(Attribute { name, kind });
                    }
                    "@data" if rest.is_empty() => {
                        if attributes.is_empty() {
                            return Err(err("@DATA before any @ATTRIBUTE".into()));
                        }
                        state = State::Data;
                    }
                    _ => return Err(err(format!("unexpected header line {line:?}"))),
                }
            }
            State::Data => {
                if instance(line, &attributes).map_err(err)? {
                    with_missing += 1;
                }
                instances += 1;
            }
        }
    }
    match state {
        State::Data => Ok(ArffSummary {
            relation,
            attributes,
            instances,
            with_missing,
        }),
        _ => Err(ArffSyntaxError {
            line: text.lines().count(),
            message: "missing @DATA section".into(),
        }),
    }
}
