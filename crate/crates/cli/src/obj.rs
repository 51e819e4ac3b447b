//! Wavefront OBJ export of trace leaves in chart coordinates.

use std::fmt::Write;

use crate::trace::TraceFile;

/// `x` with 9 significant digits, in plain decimal notation. Chart coordinates lie in the unit
/// ball, so magnitudes below `1e-12` are printed as `0`.
pub fn sig9(x: f64) -> String {
    if x.abs() < 1e-12 || !x.is_finite() {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 30) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn chart(p: &[f64; 4]) -> [f64; 3] {
    [p[1] / p[0], p[2] / p[0], p[3] / p[0]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// One object per leaf; facets are fan-triangulated with outward orientation and grouped into
/// `base` and `polar` (truncations and cuts).
pub fn to_obj(trace: &TraceFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hypertess trace: {} leaves", trace.leaves.len());
    let mut offset = 1usize;
    for (i, leaf) in trace.leaves.iter().enumerate() {
        let _ = writeln!(out, "o leaf_{i}");
        let pts: Vec<[f64; 3]> = leaf.vertices.iter().map(chart).collect();
        for p in &pts {
            let _ = writeln!(out, "v {} {} {}", sig9(p[0]), sig9(p[1]), sig9(p[2]));
        }
        let n = pts.len() as f64;
        let center = pts.iter().fold([0.0; 3], |a, p| {
            [a[0] + p[0] / n, a[1] + p[1] / n, a[2] + p[2] / n]
        });
        for (group, base) in [("base", true), ("polar", false)] {
            let facets: Vec<_> = leaf
                .facets
                .iter()
                .filter(|f| (f.kind == "base") == base)
                .collect();
            if facets.is_empty() {
                continue;
            }
            let _ = writeln!(out, "g {group}");
            for f in facets {
                let mut vs = f.vertices.clone();
                if vs.len() < 3 {
                    continue;
                }
                let normal = cross(sub(pts[vs[1]], pts[vs[0]]), sub(pts[vs[2]], pts[vs[0]]));
                if dot(normal, sub(pts[vs[0]], center)) < 0.0 {
                    vs.reverse();
                }
                for k in 1..vs.len() - 1 {
                    let _ = writeln!(
                        out,
                        "f {} {} {}",
                        vs[0] + offset,
                        vs[k] + offset,
                        vs[k + 1] + offset
                    );
                }
            }
        }
        offset += pts.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(0.8333333333333), "0.833333333");
        assert_eq!(sig9(-0.0125), "-0.0125000000");
        assert_eq!(sig9(1.5), "1.50000000");
        assert_eq!(sig9(-5e-17), "0");
    }
}
