//! Property extraction from free-form provider responses.
//!
//! Fenced code blocks are split into `property ... endproperty` spans (each
//! with its trailing `assert` lines), or into single lines when a block has
//! no `property` declarations. Outside fences only bare
//! `property ... endproperty` spans are recognised.

use crate::formula::{parse_property_file, ParseError, Property};

fn starts_property(line: &str) -> bool {
    line.trim_start().strip_prefix("property").is_some_and(|r| r.starts_with(char::is_whitespace))
}

fn is_assert(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("assert") || t.starts_with("initial assert") || t.contains(": assert")
}

fn is_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with("//")
}

/// `property ... endproperty` spans of `lines`, each extended with the
/// `assert` lines that follow it.
fn property_spans(lines: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if !starts_property(lines[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < lines.len() && !lines[i].contains("endproperty") {
            i += 1;
        }
        i = (i + 1).min(lines.len());
        while i < lines.len() && (is_assert(lines[i]) || (lines[i].trim().is_empty() && i + 1 < lines.len() && is_assert(lines[i + 1]))) {
            i += 1;
        }
        out.push(lines[start..i].join("\n").trim().to_string());
    }
    out
}

/// Candidate property texts in response order.
pub fn extract_properties(response: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut prose: Vec<&str> = Vec::new();
    let mut block: Option<Vec<&str>> = None;
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            match block.take() {
                Some(b) => out.extend(split_block(&b)),
                None => {
                    out.extend(property_spans(&prose));
                    prose.clear();
                    block = Some(Vec::new());
                }
            }
            continue;
        }
        match &mut block {
            Some(b) => b.push(line),
            None => prose.push(line),
        }
    }
    if let Some(b) = block {
        out.extend(split_block(&b));
    }
    out.extend(property_spans(&prose));
    out
}

fn split_block(lines: &[&str]) -> Vec<String> {
    if lines.iter().any(|l| starts_property(l)) {
        property_spans(lines)
    } else {
        lines.iter().filter(|l| !is_comment(l)).map(|l| l.trim().to_string()).collect()
    }
}

/// Parses one candidate; it must hold exactly one property.
pub fn parse_candidate(text: &str) -> Result<Property, ParseError> {
    let mut props = parse_property_file(text)?;
    match props.len() {
        1 => Ok(props.remove(0)),
        n => Err(ParseError {
            line: 1,
            column: 1,
            near: text.lines().next().unwrap_or_default().to_string(),
            message: format!("expected one property, found {n}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RESPONSE: &str = "Here are the properties.

```systemverilog
property p_a;
  @(posedge clk) a |-> b;
endproperty
assert property (p_a);

property p_bad;
  @(posedge clk) a |-> ;
endproperty
assert property (p_bad);
```

And one more outside a fence:

property p_c;
  @(posedge clk) disable iff (!rst_ni) c |=> d;
endproperty
assert property (p_c);
";

    #[test]
    fn fenced_and_bare() {
        let items = extract_properties(RESPONSE);
        assert_eq!(items.len(), 3);
        assert!(items[0].starts_with("property p_a;") && items[0].ends_with("assert property (p_a);"));
        let parsed: Vec<bool> = items.iter().map(|i| parse_candidate(i).is_ok()).collect();
        assert_eq!(parsed, [true, false, true]);
    }

    #[test]
    fn line_blocks_and_prose() {
        assert!(extract_properties("").is_empty());
        assert!(extract_properties("G p is an invariant.").is_empty());
        let items = extract_properties("```\n// comment\nsafe: G !(a && b)\nF c\n```");
        assert_eq!(items, ["safe: G !(a && b)", "F c"]);
        assert_eq!(parse_candidate(&items[0]).unwrap().name, "safe");
    }

    #[test]
    fn unterminated_fence() {
        let items = extract_properties("```\nproperty p;\n @(posedge clk) a;\nendproperty\nassert property (p);");
        assert_eq!(items.len(), 1);
        assert!(parse_candidate(&items[0]).is_ok());
    }
}
