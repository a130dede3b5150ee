//! Plain-text occupancy maps.
//!
//! ```text
//! 4 3 0.5
//! ....
//! .##.
//! ....
//! ```
//!
//! The header is `W H RES`. The first row in the file is the top of the map
//! (largest `y`), so the file reads like a picture.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use flowsched_core::gridmap::MapError;
use flowsched_core::GridMap;

#[derive(Debug, thiserror::Error)]
pub enum MapFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn parse_err(line: usize, msg: impl Into<String>) -> MapFileError {
    MapFileError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_map(text: &str) -> Result<GridMap, MapFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(hl, "header must be `W H RES`"));
    }
    let width: usize = fields[0].parse().map_err(|_| parse_err(hl, "bad width"))?;
    let height: usize = fields[1].parse().map_err(|_| parse_err(hl, "bad height"))?;
    let res: f64 = fields[2].parse().map_err(|_| parse_err(hl, "bad resolution"))?;

    let mut occ = vec![false; width * height];
    let mut rows = 0;
    for (ln, row) in lines {
        if rows == height {
            if row.trim().is_empty() {
                continue;
            }
            return Err(parse_err(ln, format!("more than {height} rows")));
        }
        let glyphs: Vec<char> = row.chars().collect();
        if glyphs.len() != width {
            return Err(parse_err(ln, format!("row has {} cells, expected {width}", glyphs.len())));
        }
        let y = height - 1 - rows;
        for (x, c) in glyphs.into_iter().enumerate() {
            occ[y * width + x] = match c {
                '#' => true,
                '.' => false,
                other => return Err(parse_err(ln, format!("unknown glyph {other:?}"))),
            };
        }
        rows += 1;
    }
    if rows != height {
        return Err(parse_err(hl + rows + 1, format!("expected {height} rows, found {rows}")));
    }
    Ok(GridMap::from_occupancy(width, height, res, occ)?)
}

pub fn format_map(map: &GridMap) -> String {
    let (w, h) = (map.width(), map.height());
    let mut out = String::with_capacity((w + 1) * h + 32);
    let _ = writeln!(out, "{w} {h} {}", map.resolution());
    for y in (0..h).rev() {
        for x in 0..w {
            out.push(if map.is_occupied(x, y) { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

pub fn load_map(path: &Path) -> Result<GridMap, MapFileError> {
    let text = fs::read_to_string(path).map_err(|source| MapFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_map(&text)
}

pub fn save_map(map: &GridMap, path: &Path) -> Result<(), MapFileError> {
    fs::write(path, format_map(map)).map_err(|source| MapFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_row_is_last_in_file() {
        let m = parse_map("3 2 1\n...\n.#.\n").unwrap();
        assert_eq!(m.occupied_count(), 1);
        assert!(m.is_occupied(1, 0));
    }

    #[test]
    fn short_row_names_its_line() {
        let text = format!("10 2 1\n{}\n{}\n", ".".repeat(10), ".".repeat(9));
        match parse_map(&text) {
            Err(MapFileError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_glyph_and_bad_header() {
        assert!(matches!(parse_map("2 1 1\n.x\n"), Err(MapFileError::Parse { line: 2, .. })));
        assert!(matches!(parse_map("2 1\n..\n"), Err(MapFileError::Parse { line: 1, .. })));
        assert!(matches!(parse_map("2 2 1\n..\n"), Err(MapFileError::Parse { .. })));
        assert!(parse_map("").is_err());
    }

    #[test]
    fn round_trip_keeps_resolution_bits() {
        let mut m = GridMap::empty(5, 4, 0.1 + 0.2).unwrap();
        m.set_occupied(4, 3, true);
        m.set_occupied(0, 0, true);
        let back = parse_map(&format_map(&m)).unwrap();
        assert_eq!(back.resolution().to_bits(), m.resolution().to_bits());
        assert_eq!(back.occupancy(), m.occupancy());
    }
}
