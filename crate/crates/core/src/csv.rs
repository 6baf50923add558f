//! Minimal RFC 4180 reader and writer.
//!
//! Off-the-shelf CSV readers drop the distinction between `,,` and `,"",`;
//! the table format relies on it (unquoted empty is null, quoted empty is
//! empty text), so cells here remember whether they were quoted.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub text: String,
    pub quoted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    /// 1-based line on which the row starts.
    pub line: usize,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub detail: String,
}

pub fn parse(input: &str) -> Result<Vec<Row>, ParseError> {
    let mut rows = Vec::new();
    let mut chars = input.chars().peekable();
    let mut line = 1;
    while chars.peek().is_some() {
        let start = line;
        let mut cells = Vec::new();
        loop {
            let mut cell = Cell {
                text: String::new(),
                quoted: false,
            };
            if chars.peek() == Some(&'"') {
                chars.next();
                cell.quoted = true;
                loop {
                    match chars.next() {
                        None => {
                            return Err(ParseError {
                                line: start,
                                detail: "unterminated quoted field".into(),
                            })
                        }
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            cell.text.push('"');
                        }
                        Some('"') => break,
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            cell.text.push(c);
                        }
                    }
                }
                if !matches!(chars.peek(), None | Some(',') | Some('\r') | Some('\n')) {
                    return Err(ParseError {
                        line,
                        detail: "text after closing quote".into(),
                    });
                }
            } else {
                while let Some(&c) = chars.peek() {
                    match c {
                        ',' | '\r' | '\n' => break,
                        '"' => {
                            return Err(ParseError {
                                line,
                                detail: "quote inside unquoted field".into(),
                            })
                        }
                        _ => {
                            cell.text.push(c);
                            chars.next();
                        }
                    }
                }
            }
            cells.push(cell);
            match chars.next() {
                Some(',') => continue,
                Some('\r') => {
                    if chars.next_if_eq(&'\n').is_none() {
                        return Err(ParseError {
                            line,
                            detail: "bare carriage return".into(),
                        });
                    }
                    line += 1;
                    break;
                }
                Some('\n') => {
                    line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("cell loops stop only at delimiters"),
            }
        }
        rows.push(Row { line: start, cells });
    }
    Ok(rows)
}

/// Appends one cell. `None` is written as an unquoted empty cell.
pub fn write_cell(out: &mut String, text: Option<&str>) {
    let Some(text) = text else { return };
    let needs_quotes = text.is_empty() || text.contains([',', '"', '\r', '\n']);
    if needs_quotes {
        out.push('"');
        for c in text.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(text);
    }
}

pub fn write_row<'a>(out: &mut String, cells: impl IntoIterator<Item = Option<&'a str>>) {
    for (i, cell) in cells.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_cell(out, cell);
    }
    out.push_str("\r\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(rows: &[Row]) -> Vec<Vec<(&str, bool)>> {
        rows.iter()
            .map(|r| r.cells.iter().map(|c| (c.text.as_str(), c.quoted)).collect())
            .collect()
    }

    #[test]
    fn distinguishes_null_from_empty_text() {
        let rows = parse("a,b,c\r\n,\"\",x\r\n").unwrap();
        assert_eq!(
            texts(&rows),
            vec![
                vec![("a", false), ("b", false), ("c", false)],
                vec![("", false), ("", true), ("x", false)],
            ]
        );
    }

    #[test]
    fn quoted_fields_span_lines() {
        let rows = parse("h\r\n\"one\r\ntwo\"\r\nnext\n").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].cells[0].text, "one\r\ntwo");
        assert_eq!(rows[2].line, 4);
    }

    #[test]
    fn empty_line_is_one_null_cell() {
        let rows = parse("h\r\n\r\nx\r\n").unwrap();
        assert_eq!(texts(&rows)[1], vec![("", false)]);
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn malformed_input_reports_line() {
        assert_eq!(parse("a\r\n\"open").unwrap_err().line, 2);
        assert_eq!(parse("a\r\nb\"c\r\n").unwrap_err().line, 2);
        assert_eq!(parse("a\r\n\"b\"c\r\n").unwrap_err().line, 2);
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(
            rows in prop::collection::vec(
                prop::collection::vec(prop::option::of(".{0,6}"), 1..5), 1..6)
        ) {
            let mut out = String::new();
            for r in &rows {
                write_row(&mut out, r.iter().map(|c| c.as_deref()));
            }
            let parsed = parse(&out).unwrap();
            prop_assert_eq!(parsed.len(), rows.len());
            for (p, r) in parsed.iter().zip(&rows) {
                let back: Vec<Option<String>> = p.cells.iter()
                    .map(|c| (c.quoted || !c.text.is_empty()).then(|| c.text.clone()))
                    .collect();
                prop_assert_eq!(&back, r);
            }
        }
    }
}
