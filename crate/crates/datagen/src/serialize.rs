//! Plain-text dataset directory layout.
//!
//! ```text
//! DIR/
//!   manifest.toml        reproducibility record
//!   train_plus_comm.txt  one equation per line, e.g. "z3 + z4 + z5 = z5"
//!   ...                  one file per (split, category)
//!   test_right.txt
//! ```
//!
//! Tokens are single-space separated; operators spell as `+ op om lt rt`,
//! elements as `z<k>`, structured-lookup results as `r<k>`, counts as `c<k>`.

use std::fs;
use std::path::Path;

use cayley_algebra::{CountValue, GroupElement, LabelToken, OperatorKind, ResultToken};

use crate::compose::{DatasetBundle, Manifest};
use crate::equation::{Equation, Split, TaskTag};
use crate::DatagenError;

/// Name of the manifest file inside a dataset directory.
pub const MANIFEST_FILE: &str = "manifest.toml";

fn split_file_name(split: Split, tag: TaskTag) -> String {
    format!("{}_{}.txt", split.name(), tag.name())
}

/// Writes `bundle` into directory `path` (created if missing): one text file
/// per (split, category) plus [`MANIFEST_FILE`]. Output is byte-deterministic
/// for a given bundle.
pub fn serialize(bundle: &DatasetBundle, path: &Path) -> Result<(), DatagenError> {
    fs::create_dir_all(path)?;
    let manifest_text =
        toml::to_string_pretty(&bundle.manifest).map_err(|e| DatagenError::Config(e.to_string()))?;
    fs::write(path.join(MANIFEST_FILE), manifest_text)?;
    for split in [Split::Train, Split::Test] {
        for tag in TaskTag::ALL {
            let mut text = String::new();
            for eq in bundle.category(split, tag) {
                text.push_str(&eq.render());
                text.push('\n');
            }
            fs::write(path.join(split_file_name(split, tag)), text)?;
        }
    }
    Ok(())
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> DatagenError {
    DatagenError::Parse { file: file.to_string(), line, msg: msg.into() }
}

fn parse_indexed_token(
    token: &str,
    prefix: char,
    file: &str,
    line: usize,
) -> Result<usize, DatagenError> {
    let rest = token
        .strip_prefix(prefix)
        .ok_or_else(|| parse_err(file, line, format!("expected `{prefix}<k>` token, got `{token}`")))?;
    rest.parse::<usize>()
        .map_err(|_| parse_err(file, line, format!("malformed index in token `{token}`")))
}

fn parse_label(
    token: &str,
    n: usize,
    m: usize,
    file: &str,
    line: usize,
) -> Result<LabelToken, DatagenError> {
    match token.chars().next() {
        Some('z') => {
            let idx = parse_indexed_token(token, 'z', file, line)?;
            let el = GroupElement::new(idx, n)
                .map_err(|e| parse_err(file, line, e.to_string()))?;
            Ok(LabelToken::Element(el))
        }
        Some('r') => {
            let idx = parse_indexed_token(token, 'r', file, line)?;
            if idx >= n {
                return Err(parse_err(file, line, format!("result token `{token}` out of range for modulus {n}")));
            }
            Ok(LabelToken::Result(ResultToken(idx)))
        }
        Some('c') => {
            let count = parse_indexed_token(token, 'c', file, line)?;
            if count > m {
                return Err(parse_err(file, line, format!("count token `{token}` exceeds the chain-length bound {m}")));
            }
            Ok(LabelToken::Count(CountValue(count)))
        }
        _ => Err(parse_err(file, line, format!("unrecognized label token `{token}`"))),
    }
}

fn parse_line(
    raw: &str,
    tag: TaskTag,
    n: usize,
    m: usize,
    file: &str,
    line: usize,
) -> Result<Equation, DatagenError> {
    let tokens: Vec<&str> = raw.split(' ').collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(parse_err(file, line, "tokens must be separated by single spaces"));
    }
    // Grammar: z<a> (OP z<b>)* = LABEL — k operands make 2k+1 tokens (odd),
    // label last, `=` second to last, operators at odd positions in between.
    if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
        return Err(parse_err(file, line, format!("expected `z.. (op z..)* = label`, got {} tokens", tokens.len())));
    }
    let label_tok = tokens[tokens.len() - 1];
    if tokens[tokens.len() - 2] != "=" {
        return Err(parse_err(file, line, "missing `=` before the label token"));
    }
    let op = tag.operator();
    let mut operands = Vec::new();
    for (i, tok) in tokens[..tokens.len() - 2].iter().enumerate() {
        if i % 2 == 0 {
            let idx = parse_indexed_token(tok, 'z', file, line)?;
            let el = GroupElement::new(idx, n)
                .map_err(|e| parse_err(file, line, e.to_string()))?;
            operands.push(el);
        } else if *tok != op.token() {
            return Err(parse_err(file, line, format!("operator `{tok}` does not match the file's category operator `{}`", op.token())));
        }
    }
    if operands.len() > m + 1 {
        return Err(parse_err(file, line, format!("{} operands exceed the maximum chain length {}", operands.len(), m + 1)));
    }
    let label = parse_label(label_tok, n, m, file, line)?;
    let expected_kind_ok = matches!(
        (op, &label),
        (OperatorKind::Plus | OperatorKind::Left | OperatorKind::Right, LabelToken::Element(_))
            | (OperatorKind::Oplus, LabelToken::Result(_))
            | (OperatorKind::Ominus, LabelToken::Count(_))
    );
    if !expected_kind_ok {
        return Err(parse_err(file, line, format!("label `{label_tok}` has the wrong kind for operator `{}`", op.token())));
    }
    Ok(Equation { op, operands, label })
}

/// Reads a dataset directory written by [`serialize`] back into a
/// [`DatasetBundle`]. Malformed content reports file and line number. Labels
/// are read as stored; run [`crate::audit_labels`] to re-verify them.
pub fn parse(path: &Path) -> Result<DatasetBundle, DatagenError> {
    let manifest_path = path.join(MANIFEST_FILE);
    let manifest_text = fs::read_to_string(&manifest_path)?;
    let manifest: Manifest = toml::from_str(&manifest_text).map_err(|e| DatagenError::Parse {
        file: MANIFEST_FILE.to_string(),
        line: e.span().map(|s| manifest_text[..s.start].lines().count()).unwrap_or(0),
        msg: e.message().to_string(),
    })?;
    let (n, m) = (manifest.n, manifest.m);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for split in [Split::Train, Split::Test] {
        for tag in TaskTag::ALL {
            let name = split_file_name(split, tag);
            let text = fs::read_to_string(path.join(&name))?;
            for (i, raw) in text.lines().enumerate() {
                let eq = parse_line(raw, tag, n, m, &name, i + 1)?;
                match split {
                    Split::Train => train.push((eq, tag)),
                    Split::Test => test.push((eq, tag)),
                }
            }
        }
    }
    Ok(DatasetBundle { train, test, manifest })
}
