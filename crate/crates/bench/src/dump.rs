//! Line-oriented text dumps of decompositions, networks and path-selection
//! programs. Numbers use Rust's shortest round-trip formatting, so parsing a
//! dump gives back the same bits.

use std::fmt::Write as _;

use flowsched_core::miqp::QuadTerm;
use flowsched_core::{BinaryQuadraticProgram, CellSet, NetGraph};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct DumpError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> DumpError {
    DumpError {
        line,
        msg: msg.into(),
    }
}

/// `C id rows y0..y1 area`, one `S row x0 x1` per span, then
/// `B id below above x0 x1 row length` per boundary.
pub fn cells_report(cells: &CellSet) -> String {
    let mut out = String::new();
    for c in cells.cells() {
        let _ = writeln!(
            out,
            "C {} rows {}..{} area {}",
            c.id.0,
            c.bottom_row(),
            c.top_row(),
            c.area()
        );
        for s in &c.row_spans {
            let _ = writeln!(out, "  S {} {} {}", s.row, s.x0, s.x1);
        }
    }
    for b in cells.boundaries() {
        let _ = writeln!(
            out,
            "B {} {} {} {} {} {} {}",
            b.id, b.below.0, b.above.0, b.x0, b.x1, b.row, b.length
        );
    }
    out
}

/// `N id x y cap` per node, then `L id a b len cap` per link.
pub fn network_dump(g: &NetGraph) -> String {
    let mut out = String::new();
    for n in &g.nodes {
        let _ = writeln!(out, "N {} {} {} {}", n.id.0, n.position.x, n.position.y, n.capacity);
    }
    for l in &g.links {
        let _ = writeln!(out, "L {} {} {} {} {}", l.id.0, l.start.0, l.end.0, l.length, l.capacity);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeLine {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub cap: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkLine {
    pub id: u32,
    pub a: u32,
    pub b: u32,
    pub len: f64,
    pub cap: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkDump {
    pub nodes: Vec<NodeLine>,
    pub links: Vec<LinkLine>,
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, line: usize) -> Result<T, DumpError> {
    parts
        .get(i)
        .ok_or_else(|| err(line, "missing field"))?
        .parse()
        .map_err(|_| err(line, format!("bad field {:?}", parts[i])))
}

pub fn parse_network_dump(text: &str) -> Result<NetworkDump, DumpError> {
    let mut d = NetworkDump::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let p: Vec<&str> = raw.split_whitespace().collect();
        match p.first() {
            None => continue,
            Some(&"N") if p.len() == 5 => d.nodes.push(NodeLine {
                id: field(&p, 1, line)?,
                x: field(&p, 2, line)?,
                y: field(&p, 3, line)?,
                cap: field(&p, 4, line)?,
            }),
            Some(&"L") if p.len() == 6 => d.links.push(LinkLine {
                id: field(&p, 1, line)?,
                a: field(&p, 2, line)?,
                b: field(&p, 3, line)?,
                len: field(&p, 4, line)?,
                cap: field(&p, 5, line)?,
            }),
            Some(_) => return Err(err(line, "expected `N id x y cap` or `L id a b len cap`")),
        }
    }
    Ok(d)
}

/// ```text
/// V <number of variables>
/// G v v ...          one-hot group
/// C v cost           linear cost, one line per variable
/// Q scale offset v ...
/// ```
pub fn program_dump(p: &BinaryQuadraticProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "V {}", p.linear.len());
    for g in &p.groups {
        out.push('G');
        for v in g {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for (v, c) in p.linear.iter().enumerate() {
        let _ = writeln!(out, "C {v} {c}");
    }
    for t in &p.quad {
        let _ = write!(out, "Q {} {}", t.scale, t.offset);
        for v in &t.vars {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_program(text: &str) -> Result<BinaryQuadraticProgram, DumpError> {
    let mut p = BinaryQuadraticProgram::default();
    let mut declared = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let parts: Vec<&str> = raw.split_whitespace().collect();
        let rest = |from: usize| -> Result<Vec<usize>, DumpError> {
            (from..parts.len()).map(|k| field(&parts, k, line)).collect()
        };
        match parts.first() {
            None => continue,
            Some(&"V") => {
                let n: usize = field(&parts, 1, line)?;
                p.linear = vec![0.0; n];
                declared = Some(n);
            }
            Some(&"G") => p.groups.push(rest(1)?),
            Some(&"C") => {
                let n = declared.ok_or_else(|| err(line, "`C` before `V`"))?;
                let v: usize = field(&parts, 1, line)?;
                if v >= n {
                    return Err(err(line, format!("variable {v} out of range")));
                }
                p.linear[v] = field(&parts, 2, line)?;
            }
            Some(&"Q") => p.quad.push(QuadTerm {
                scale: field(&parts, 1, line)?,
                offset: field(&parts, 2, line)?,
                vars: rest(3)?,
            }),
            Some(other) => return Err(err(line, format!("unknown record {other:?}"))),
        }
    }
    if declared.is_none() {
        return Err(err(1, "missing `V` line"));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowsched_core::decomposition::decompose;
    use flowsched_core::network::{build_network, NetworkParams};
    use flowsched_core::GridMap;

    #[test]
    fn network_dump_round_trips() {
        let mut map = GridMap::empty(12, 6, 1.0).unwrap();
        map.set_occupied(5, 3, true);
        map.set_occupied(6, 3, true);
        let g = build_network(&decompose(&map).unwrap(), NetworkParams::default()).unwrap();
        let d = parse_network_dump(&network_dump(&g)).unwrap();
        assert_eq!(d.nodes.len(), g.nodes.len());
        assert_eq!(d.links.len(), g.links.len());
        for (a, b) in d.nodes.iter().zip(&g.nodes) {
            assert_eq!((a.x, a.y, a.cap), (b.position.x, b.position.y, b.capacity));
        }
        for (a, b) in d.links.iter().zip(&g.links) {
            assert_eq!((a.a, a.b, a.len, a.cap), (b.start.0, b.end.0, b.length, b.capacity));
        }
    }

    #[test]
    fn bad_network_line_is_reported() {
        assert_eq!(parse_network_dump("N 0 1 2 3\nX\n").unwrap_err().line, 2);
        assert_eq!(parse_network_dump("L 0 1 2 x 3\n").unwrap_err().line, 1);
    }

    #[test]
    fn program_round_trips() {
        let p = BinaryQuadraticProgram {
            groups: vec![vec![0, 1], vec![2]],
            linear: vec![0.1 + 0.2, 2.5, -1.0],
            quad: vec![QuadTerm {
                vars: vec![0, 2],
                offset: -3.0,
                scale: 1.0 / 9.0,
            }],
        };
        assert_eq!(parse_program(&program_dump(&p)).unwrap(), p);
        assert!(parse_program("G 0\n").is_err());
        assert!(parse_program("V 1\nC 3 1.0\n").is_err());
    }

    #[test]
    fn cells_report_lists_every_span() {
        let map = GridMap::empty(3, 2, 1.0).unwrap();
        let r = cells_report(&decompose(&map).unwrap());
        assert_eq!(r.lines().filter(|l| l.starts_with("C ")).count(), 1);
        assert_eq!(r.lines().filter(|l| l.trim_start().starts_with("S ")).count(), 2);
    }
}
