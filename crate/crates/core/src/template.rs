//! Minimal mustache-style template engine used for submit scripts.
//!
//! Supported syntax:
//! - `{{name}}` substitutes a value; an unknown name is a rendering error.
//! - `{{#name}}...{{/name}}` renders the section if `name` is present
//!   (and not `false`); for list values the section repeats per item with
//!   the item's keys layered over the outer context.
//!
//! No other logic lives in templates; optional-field presence tests are the
//! only control flow.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum TValue {
    Str(String),
    Bool(bool),
    List(Vec<Context>),
}

pub type Context = BTreeMap<String, TValue>;

pub fn str_value(s: impl Into<String>) -> TValue {
    TValue::Str(s.into())
}

/// Renders `template` against `ctx`.
pub fn render(template: &str, ctx: &Context) -> Result<String> {
    let stack = vec![ctx];
    render_part(template, &stack)
}

fn lookup<'a>(stack: &[&'a Context], name: &str) -> Option<&'a TValue> {
    stack.iter().rev().find_map(|ctx| ctx.get(name))
}

fn render_part(part: &str, stack: &[&Context]) -> Result<String> {
    let mut out = String::with_capacity(part.len());
    let mut rest = part;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after
            .find("}}")
            .ok_or_else(|| Error::Other("unterminated {{ tag in template".into()))?;
        let tag = &after[..close];
        rest = &after[close + 2..];
        if let Some(name) = tag.strip_prefix('#') {
            let (body, tail) = split_section(rest, name)?;
            match lookup(stack, name) {
                None | Some(TValue::Bool(false)) => {}
                Some(TValue::List(items)) => {
                    for item in items {
                        let mut inner = stack.to_vec();
                        inner.push(item);
                        out.push_str(&render_part(body, &inner)?);
                    }
                }
                Some(_) => out.push_str(&render_part(body, stack)?),
            }
            rest = tail;
        } else if tag.starts_with('/') {
            return Err(Error::Other(format!("unmatched section close {tag:?}")));
        } else {
            match lookup(stack, tag) {
                Some(TValue::Str(s)) => out.push_str(s),
                Some(TValue::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
                Some(TValue::List(_)) => {
                    return Err(Error::Other(format!(
                        "cannot substitute list value {tag:?}"
                    )))
                }
                None => return Err(Error::TemplateField(tag.to_string())),
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Splits `rest` into the body of the section named `name` and the text
/// following its closing tag, honoring nested sections of the same name.
fn split_section<'a>(rest: &'a str, name: &str) -> Result<(&'a str, &'a str)> {
    let open_tag = format!("{{{{#{name}}}}}");
    let close_tag = format!("{{{{/{name}}}}}");
    let mut depth = 0usize;
    let mut pos = 0usize;
    loop {
        let next_open = rest[pos..].find(&open_tag);
        let next_close = rest[pos..].find(&close_tag);
        match next_close {
            None => {
                return Err(Error::Other(format!("unclosed section {name:?}")))
            }
            Some(c) => match next_open {
                Some(o) if o < c => {
                    pos += o + open_tag.len();
                    depth += 1;
                }
                _ => {
                    if depth == 0 {
                        let body = &rest[..pos + c];
                        let tail = &rest[pos + c + close_tag.len()..];
                        return Ok((body, tail));
                    }
                    depth -= 1;
                    pos += c + close_tag.len();
                }
            },
        }
    }
}
