//! `EMTREE v1` line format.
//!
//! ```text
//! EMTREE v1
//! DESIGN <design_id>
//! NODE <id> <x_um> <y_um> <junction|terminal>
//! BRANCH <id> <from> <to> <width_um> <j_A_per_m2>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. `DESIGN` is
//! optional and defaults to 0. Floats are written in Rust's shortest
//! round-trip form, so write -> parse is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{BranchSpec, InterconnectTree, Node, NodeKind};
use crate::error::{Error, Result};

pub const TREE_MAGIC: &str = "EMTREE";
const VERSION: &str = "v1";

pub fn write_tree(tree: &InterconnectTree) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TREE_MAGIC} {VERSION}");
    let _ = writeln!(s, "DESIGN {}", tree.design_id);
    for n in &tree.nodes {
        let _ = writeln!(s, "NODE {} {} {} {}", n.id, n.x, n.y, n.kind);
    }
    for b in &tree.branches {
        let _ = writeln!(s, "BRANCH {} {} {} {} {:e}", b.id, b.from, b.to, b.width, b.current_density);
    }
    s
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("bad {what} `{tok}`") })
}

pub fn parse_tree(text: &str) -> Result<InterconnectTree> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header = lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((hline, header)) = header else {
        return Err(Error::Parse { line: 1, msg: "empty input".into() });
    };
    let mut toks = header.split_whitespace();
    if toks.next() != Some(TREE_MAGIC) {
        return Err(Error::Parse { line: hline, msg: format!("expected `{TREE_MAGIC} {VERSION}` header") });
    }
    match toks.next() {
        Some(VERSION) => {}
        other => return Err(Error::Version { format: TREE_MAGIC, found: other.unwrap_or("").to_string() }),
    }

    let mut design_id = 0;
    let mut nodes = Vec::new();
    let mut specs = Vec::new();
    for (line, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut t = l.split_whitespace();
        let rec = t.next().unwrap_or_default();
        match rec {
            "DESIGN" => design_id = field(t.next(), line, "design id")?,
            "NODE" => {
                let id = field(t.next(), line, "node id")?;
                let x = field(t.next(), line, "x")?;
                let y = field(t.next(), line, "y")?;
                let kind = match t.next() {
                    Some("junction") => NodeKind::Junction,
                    Some("terminal") => NodeKind::Terminal,
                    other => {
                        return Err(Error::Parse { line, msg: format!("bad node kind {other:?}") });
                    }
                };
                nodes.push(Node { id, x, y, kind });
            }
            "BRANCH" => specs.push(BranchSpec {
                id: field(t.next(), line, "branch id")?,
                from: field(t.next(), line, "from node")?,
                to: field(t.next(), line, "to node")?,
                width: field(t.next(), line, "width")?,
                current_density: field(t.next(), line, "current density")?,
            }),
            other => return Err(Error::Parse { line, msg: format!("unknown record `{other}`") }),
        }
        if let Some(extra) = t.next() {
            return Err(Error::Parse { line, msg: format!("trailing token `{extra}`") });
        }
    }
    Ok(InterconnectTree::from_specs(design_id, nodes, specs))
}

pub fn read_tree(path: &Path) -> Result<InterconnectTree> {
    let text = std::fs::read_to_string(path).map_err(Error::io_at(path))?;
    parse_tree(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# three-terminal tree
EMTREE v1
DESIGN 42
NODE 0 10 50 terminal
NODE 1 50 50 junction
NODE 2 90 50 terminal
NODE 3 50 100 terminal

BRANCH 0 0 1 2 1e8
BRANCH 1 1 2 1 1e8
BRANCH 2 1 3 1 -1.25e8
";

    #[test]
    fn parse_then_write_is_stable() {
        let t = parse_tree(SAMPLE).unwrap();
        assert_eq!(t.design_id, 42);
        assert_eq!(t.nodes.len(), 4);
        assert_eq!(t.branches[2].current_density, -1.25e8);
        assert_eq!(t.branches[2].length, 50.0);
        let text = write_tree(&t);
        assert_eq!(parse_tree(&text).unwrap(), t);
        assert_eq!(write_tree(&parse_tree(&text).unwrap()), text);
    }

    #[test]
    fn rejects_unknown_version() {
        let err = parse_tree("EMTREE v2\nNODE 0 1 1 terminal\n").unwrap_err();
        assert!(matches!(err, Error::Version { ref found, .. } if found == "v2"), "{err}");
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_tree("EMTREE v1\nNODE 0 1 x terminal\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_tree("EMTREE v1\nWIRE 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_tree("EMTREE v1\nNODE 0 1 1 pad\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tree("EMTREE v1\nNODE 0 1 1 terminal 5\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tree("TREE v1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_tree("").is_err());
    }
}
