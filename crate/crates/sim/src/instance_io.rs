//! Plain-text deployment dumps.
//!
//! ```text
//! format_version 1
//! n 2
//! m 1
//! r 0.1
//! p 0.25
//! users
//! 0.01 0 1
//! -0.01 0 0
//! stations
//! 0 0
//! ```
//!
//! Each user line is `x y active` with `active` in `{0, 1}`.

use std::fmt::Write as _;
use std::path::Path;

use aloha_core::{NetworkInstance, Point2, SystemParams};

use crate::error::SimError;
use crate::format::exact;

pub fn render_instance(instance: &NetworkInstance) -> String {
    let params = &instance.params;
    let mut out = String::new();
    let _ = writeln!(out, "format_version 1");
    let _ = writeln!(out, "n {}", params.n());
    let _ = writeln!(out, "m {}", params.m());
    let _ = writeln!(out, "r {}", exact(params.r()));
    let _ = writeln!(out, "p {}", exact(params.p()));
    out.push_str("users\n");
    for (q, &a) in instance.user_positions.iter().zip(&instance.active) {
        let _ = writeln!(out, "{} {} {}", exact(q.x), exact(q.y), u8::from(a));
    }
    out.push_str("stations\n");
    for q in &instance.station_positions {
        let _ = writeln!(out, "{} {}", exact(q.x), exact(q.y));
    }
    out
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Cursor { lines, pos: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), SimError> {
        let end = self.lines.last().map_or(1, |(no, _)| no + 1);
        let (no, line) = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| SimError::format(end, format!("missing {what}")))?;
        self.pos += 1;
        Ok((no, line.split_whitespace().collect()))
    }

    fn header<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, SimError> {
        match self.next(key)? {
            (no, parts) if parts.len() == 2 && parts[0] == key => parse_num(no, parts[1]),
            (no, _) => Err(SimError::format(no, format!("expected `{key} <value>`"))),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<(), SimError> {
        match self.next(key)? {
            (_, parts) if parts == [key] => Ok(()),
            (no, _) => Err(SimError::format(no, format!("expected `{key}`"))),
        }
    }
}

fn parse_num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T, SimError> {
    s.parse()
        .map_err(|_| SimError::format(no, format!("bad number `{s}`")))
}

pub fn parse_instance(text: &str) -> Result<NetworkInstance, SimError> {
    let mut cur = Cursor::new(text);
    let version: u32 = cur.header("format_version")?;
    if version != 1 {
        return Err(SimError::format(1, format!("unsupported format_version {version}")));
    }
    let n: usize = cur.header("n")?;
    let m: usize = cur.header("m")?;
    let r: f64 = cur.header("r")?;
    let p: f64 = cur.header("p")?;
    let params = SystemParams::new(n, m, r, p)?;

    cur.keyword("users")?;
    let mut users = Vec::with_capacity(n);
    let mut active = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, parts) = cur.next("user line")?;
        let [x, y, a] = parts[..] else {
            return Err(SimError::format(no, "expected `x y active`"));
        };
        users.push(Point2::new(parse_num(no, x)?, parse_num(no, y)?));
        active.push(match a {
            "1" => true,
            "0" => false,
            _ => return Err(SimError::format(no, "activity flag must be 0 or 1")),
        });
    }
    cur.keyword("stations")?;
    let mut stations = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, parts) = cur.next("station line")?;
        let [x, y] = parts[..] else {
            return Err(SimError::format(no, "expected `x y`"));
        };
        stations.push(Point2::new(parse_num(no, x)?, parse_num(no, y)?));
    }
    if let Some(&(no, _)) = cur.lines.get(cur.pos) {
        return Err(SimError::format(no, "trailing data"));
    }
    Ok(NetworkInstance::from_parts(params, users, stations, active)?)
}

pub fn load_instance(path: &Path) -> Result<NetworkInstance, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aloha_core::scenario::generate_instance;
    use aloha_core::stream::substream;

    #[test]
    fn round_trip() {
        let params = SystemParams::new(7, 4, 0.2, 0.4).unwrap();
        let inst = generate_instance(params, &mut substream(3, &[1]));
        let text = render_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn rejects_bad_input() {
        let params = SystemParams::new(2, 1, 0.2, 0.4).unwrap();
        let inst = generate_instance(params, &mut substream(3, &[2]));
        let text = render_instance(&inst);
        let bad = [
            text.replace("n 2", "n 3"),
            text.replace("stations\n", ""),
            format!("{text}0 0\n"),
            text.replace("format_version 1", "format_version 7"),
            text.replace("r 0.2", "r 0.9"),
            text.replacen(" 1\n", " 2\n", 1).replacen(" 0\n", " 2\n", 1),
        ];
        for case in &bad {
            assert!(parse_instance(case).is_err(), "accepted:\n{case}");
        }
    }

    #[test]
    fn rejects_points_outside_square() {
        let text = "format_version 1\nn 1\nm 1\nr 0.1\np 0.5\nusers\n0.6 0 1\nstations\n0 0\n";
        assert!(parse_instance(text).is_err());
    }
}
