/// Remove markup tags (`<i>`, `<v Speaker>`, `<00:00:01.000>`) and SSA
/// override blocks (`{\an8}`).
pub fn strip_tags(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut chars = input.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '<' if looks_like_tag(chars.clone()) => {
                for c in chars.by_ref() {
                    if c == '>' {
                        break;
                    }
                }
            }
            '{' if chars.peek() == Some(&'\\') => {
                for c in chars.by_ref() {
                    if c == '}' {
                        break;
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}

// A `<` only opens a tag when a `>` follows before any line break, and the
// tag starts with a letter, `/` or a digit (inline timestamps).
fn looks_like_tag(mut rest: impl Iterator<Item = char>) -> bool {
    match rest.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '/' => {}
        _ => return false,
    }
    for c in rest {
        match c {
            '>' => return true,
            '\n' | '<' => return false,
            _ => {}
        }
    }
    false
}

fn is_invisible(c: char) -> bool {
    matches!(
        c,
        '\u{200B}' | '\u{200C}' | '\u{200D}' | '\u{2060}' | '\u{FEFF}' | '\u{00AD}'
            | '\u{200E}' | '\u{200F}'
    ) || (c.is_control() && !c.is_whitespace())
}

/// Collapse whitespace runs to one space, trim, and drop zero-width and
/// control characters.
pub fn normalize_text(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut pending_space = false;
    for c in input.chars() {
        if is_invisible(c) {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}
