use crate::error::{Error, Result};
use crate::geom::Point;

const HEADER: &str = "id,x,y";

/// Serializes node coordinates as `id,x,y` rows. Seventeen decimals keep
/// every coordinate well above nine significant digits.
pub fn write_placement_csv(positions: &[Point]) -> String {
    let mut out = String::with_capacity(48 * (positions.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for (id, p) in positions.iter().enumerate() {
        out.push_str(&format!("{id},{:.17},{:.17}\n", p.x, p.y));
    }
    out
}

/// Parses a placement file. Rows may appear in any order but every ID in
/// `0..n` must occur exactly once.
pub fn parse_placement_csv(text: &str) -> Result<Vec<Point>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == HEADER => {}
        Some((line, _)) => return Err(Error::parse(line, format!("expected header `{HEADER}`"))),
        None => return Err(Error::parse(1, "empty placement file")),
    }

    let mut rows: Vec<(usize, Point, usize)> = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(line, "expected three fields"));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("malformed node ID `{}`", fields[0])))?;
        let coord = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line, format!("malformed coordinate `{s}`")))
        };
        rows.push((id, Point::new(coord(fields[1])?, coord(fields[2])?), line));
    }

    let n = rows.len();
    let mut positions = vec![None; n];
    for (id, p, line) in rows {
        match positions.get_mut(id) {
            None => return Err(Error::parse(line, "node ID out of range")),
            Some(Some(_)) => return Err(Error::parse(line, "duplicate node ID")),
            Some(slot) => *slot = Some(p),
        }
    }
    Ok(positions.into_iter().map(|p| p.expect("ids are dense")).collect())
}
