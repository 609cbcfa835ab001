use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};
use crate::geometry::Point3;

const NUM: &str = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?";

fn triple_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let t = format!(r"\s*({NUM})\s*,\s*({NUM})\s*,\s*({NUM})\s*");
        Regex::new(&format!(r"\({t}\)|\[{t}\]")).expect("static regex")
    })
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[^\n]*\n(.*?)```").expect("static regex"))
}

fn triples(text: &str) -> Result<Vec<Point3>> {
    triple_re()
        .captures_iter(text)
        .map(|c| {
            let g = |k: usize| {
                let s = c.get(k).or_else(|| c.get(k + 3)).expect("one branch matched").as_str();
                s.parse::<f64>().ok().filter(|v| v.is_finite())
            };
            match (g(1), g(2), g(3)) {
                (Some(x), Some(y), Some(z)) => Ok(Point3::new(x, y, z)),
                _ => Err(Error::UnparseablePlan {
                    found: 0,
                    raw: text.to_string(),
                }),
            }
        })
        .collect()
}

/// Extracts ordered `(x, y, z)` / `[x, y, z]` triples from a model reply.
/// Triples inside fenced code blocks win over ones in the surrounding prose.
pub fn parse_waypoints(raw: &str) -> Result<Vec<Point3>> {
    let fenced: String = fence_re()
        .captures_iter(raw)
        .map(|c| c[1].to_string())
        .collect::<Vec<_>>()
        .join("\n");
    let reject = |found| Error::UnparseablePlan {
        found,
        raw: raw.to_string(),
    };
    let mut pts = triples(&fenced).map_err(|_| reject(0))?;
    if pts.len() < 2 {
        pts = triples(raw).map_err(|_| reject(0))?;
    }
    if pts.len() < 2 {
        return Err(reject(pts.len()));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prose_with_tuples() {
        let p = parse_waypoints("Here is the path:\n(0.00, 6.00, 0.50)\n(2.20, 0.00, 0.50)\n(0.00, -7.00, 0.50)").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1], Point3::new(2.2, 0.0, 0.5));
    }

    #[test]
    fn nested_brackets() {
        let p = parse_waypoints("[[0,6,0.5],[0,-7,0.5]]").unwrap();
        assert_eq!(p, vec![Point3::new(0.0, 6.0, 0.5), Point3::new(0.0, -7.0, 0.5)]);
    }

    #[test]
    fn refusal_is_unparseable() {
        match parse_waypoints("I cannot help with that.") {
            Err(Error::UnparseablePlan { found, raw }) => {
                assert_eq!(found, 0);
                assert_eq!(raw, "I cannot help with that.");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_triple_is_unparseable() {
        assert!(matches!(
            parse_waypoints("(1, 2, 3)"),
            Err(Error::UnparseablePlan { found: 1, .. })
        ));
    }

    #[test]
    fn fenced_block_preferred() {
        let raw = "Start is (0, 6, 0.5) and goal (0, -7, 0.5).\n```\n(0, 6, 0.5)\n(2, 0, 0.5)\n(0, -7, 0.5)\n```";
        let p = parse_waypoints(raw).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1].x, 2.0);
    }

    #[test]
    fn overflowing_number_rejected() {
        assert!(parse_waypoints("(1e999, 0, 0)\n(0, 0, 0)").is_err());
    }

    #[test]
    fn signs_and_exponents() {
        let p = parse_waypoints("(+1.5, -.5, 2e-1), (3., 4, 5)").unwrap();
        assert_eq!(p[0], Point3::new(1.5, -0.5, 0.2));
        assert_eq!(p[1], Point3::new(3.0, 4.0, 5.0));
    }
}
