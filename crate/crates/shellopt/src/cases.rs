//! Built-in load case library and case-file parsing.
//!
//! The ten built-in cases follow the published load points and boundary
//! conditions. Mid-surface control nets for them are not published, so each
//! case is paired with a parametric stand-in surface; the flat plate is the
//! canonical verification geometry. All loads act in global -z. Line loads
//! (cases 3-6) are discretized as evenly spaced point loads of magnitude
//! `G / count` along the two parametric center lines.

use crate::error::FeaError;
use crate::shellfea::LoadCase;
use crate::shellgeom::AnalyticSurface;

#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub name: String,
    pub geometry: AnalyticSurface,
    pub loads: LoadCase,
    pub vstar: f64,
}

pub const CASE_NAMES: [&str; 10] = [
    "case1", "case2", "case3", "case4", "case5", "case6", "case7", "case8", "case9", "case10",
];

/// Default number of point loads per parametric line for cases 3-6.
pub const DEFAULT_LINE_POINTS: usize = 33;

fn down(g: f64) -> [f64; 3] {
    [0.0, 0.0, -g]
}

fn corners() -> Vec<(f64, f64)> {
    vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
}

/// Point loads along the two center lines `s = 1/2` and `t = 1/2`.
fn cross_line_loads(g: f64, count: usize) -> Vec<(f64, f64, [f64; 3])> {
    assert!(count >= 2);
    let per = g / count as f64;
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let x = i as f64 / (count - 1) as f64;
        out.push((0.5, x, down(per)));
    }
    for i in 0..count {
        let x = i as f64 / (count - 1) as f64;
        out.push((x, 0.5, down(per)));
    }
    out
}

/// Builds one of the ten built-in cases.
pub fn builtin_case(name: &str, line_points: usize) -> Option<CaseSpec> {
    let center100 = vec![(0.5, 0.5, down(100.0))];
    let (geometry, loads) = match name {
        "case1" => (
            AnalyticSurface::Plate,
            LoadCase {
                point_loads: center100,
                fixed_points: corners(),
            },
        ),
        "case2" => (
            AnalyticSurface::CylPanel,
            LoadCase {
                point_loads: center100,
                fixed_points: corners(),
            },
        ),
        "case3" => (
            AnalyticSurface::Plate,
            LoadCase {
                point_loads: cross_line_loads(10.0, line_points),
                fixed_points: corners(),
            },
        ),
        "case4" => (
            AnalyticSurface::CylPanel,
            LoadCase {
                point_loads: cross_line_loads(10.0, line_points),
                fixed_points: corners(),
            },
        ),
        "case5" => (
            AnalyticSurface::Hypar,
            LoadCase {
                point_loads: cross_line_loads(10.0, line_points),
                fixed_points: corners(),
            },
        ),
        "case6" => (
            AnalyticSurface::SphericalCap,
            LoadCase {
                point_loads: cross_line_loads(10.0, line_points),
                fixed_points: corners(),
            },
        ),
        "case7" => (
            AnalyticSurface::Plate,
            LoadCase {
                point_loads: vec![
                    (0.2, 0.5, down(100.0)),
                    (0.5, 0.2, down(100.0)),
                    (0.2, 0.8, down(100.0)),
                    (0.8, 0.2, down(100.0)),
                    (0.5, 0.5, down(100.0)),
                ],
                fixed_points: corners(),
            },
        ),
        "case8" => (
            AnalyticSurface::CylPanel,
            LoadCase {
                point_loads: vec![
                    (0.0, 0.0, down(100.0)),
                    (0.0, 1.0, down(100.0)),
                    (1.0, 0.0, down(100.0)),
                    (1.0, 1.0, down(100.0)),
                    (0.5, 0.5, down(100.0)),
                ],
                fixed_points: vec![(0.5, 0.0), (0.5, 1.0), (0.0, 0.5), (1.0, 0.5)],
            },
        ),
        "case9" => (
            AnalyticSurface::Hypar,
            LoadCase {
                point_loads: vec![
                    (0.2, 0.3, down(100.0)),
                    (0.8, 0.7, down(100.0)),
                    (0.2, 0.7, down(100.0)),
                    (0.8, 0.3, down(100.0)),
                ],
                fixed_points: corners(),
            },
        ),
        "case10" => {
            let mut point_loads: Vec<(f64, f64, [f64; 3])> = vec![
                (0.25, 0.33, down(100.0)),
                (0.25, 0.67, down(100.0)),
                (0.75, 0.33, down(100.0)),
                (0.75, 0.67, down(100.0)),
            ];
            for &(s, t) in &[
                (0.0, 0.0),
                (0.0, 1.0),
                (1.0, 0.0),
                (1.0, 1.0),
                (0.25, 0.0),
                (0.75, 0.0),
                (0.25, 1.0),
                (0.75, 1.0),
                (0.0, 0.4),
                (0.0, 0.6),
                (1.0, 0.4),
                (1.0, 0.6),
            ] {
                point_loads.push((s, t, down(30.0)));
            }
            (
                AnalyticSurface::SphericalCap,
                LoadCase {
                    point_loads,
                    fixed_points: vec![(0.5, 0.5)],
                },
            )
        }
        _ => return None,
    };
    Some(CaseSpec {
        name: name.to_string(),
        geometry,
        loads,
        vstar: 0.3,
    })
}

/// Parses a user case file: `key = value` lines with keys `name`, `geometry`,
/// `vstar`, repeated `load = s t fx fy fz`, repeated `fixed = s t`.
pub fn parse_case_file(text: &str) -> Result<CaseSpec, FeaError> {
    let mut name = None;
    let mut geometry = None;
    let mut vstar = 0.3;
    let mut point_loads = Vec::new();
    let mut fixed_points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FeaError::Config(format!("case file line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: &str| FeaError::Config(format!("case file line {}: {}", lineno + 1, msg));
        match key {
            "name" => name = Some(value.to_string()),
            "geometry" => {
                geometry = Some(
                    AnalyticSurface::from_name(value)
                        .ok_or_else(|| bad(&format!("unknown geometry `{value}`")))?,
                )
            }
            "vstar" => vstar = value.parse().map_err(|_| bad("invalid vstar"))?,
            "load" => {
                let nums: Vec<f64> = value
                    .split_whitespace()
                    .map(|x| x.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("load expects `s t fx fy fz`"))?;
                if nums.len() != 5 {
                    return Err(bad("load expects `s t fx fy fz`"));
                }
                point_loads.push((nums[0], nums[1], [nums[2], nums[3], nums[4]]));
            }
            "fixed" => {
                let nums: Vec<f64> = value
                    .split_whitespace()
                    .map(|x| x.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("fixed expects `s t`"))?;
                if nums.len() != 2 {
                    return Err(bad("fixed expects `s t`"));
                }
                fixed_points.push((nums[0], nums[1]));
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    let spec = CaseSpec {
        name: name.unwrap_or_else(|| "custom".to_string()),
        geometry: geometry.unwrap_or(AnalyticSurface::Plate),
        loads: LoadCase {
            point_loads,
            fixed_points,
        },
        vstar,
    };
    validate_case(&spec)?;
    Ok(spec)
}

pub fn validate_case(spec: &CaseSpec) -> Result<(), FeaError> {
    for &(s, t, _) in &spec.loads.point_loads {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(FeaError::Config(format!(
                "load point ({s}, {t}) outside [0,1]^2"
            )));
        }
    }
    for &(s, t) in &spec.loads.fixed_points {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(FeaError::Config(format!(
                "fixed point ({s}, {t}) outside [0,1]^2"
            )));
        }
    }
    if !(spec.vstar > 0.0 && spec.vstar < 1.0) {
        return Err(FeaError::Config(format!(
            "volume fraction {} out of (0, 1)",
            spec.vstar
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case1_center_load_fixed_corners() {
        let c = builtin_case("case1", DEFAULT_LINE_POINTS).unwrap();
        assert_eq!(c.loads.point_loads.len(), 1);
        assert_eq!(c.loads.point_loads[0], (0.5, 0.5, [0.0, 0.0, -100.0]));
        assert_eq!(c.loads.fixed_points.len(), 4);
    }

    #[test]
    fn case8_loads_and_midpoint_supports() {
        let c = builtin_case("case8", DEFAULT_LINE_POINTS).unwrap();
        assert_eq!(c.loads.point_loads.len(), 5);
        assert!(c.loads.fixed_points.contains(&(0.5, 0.0)));
        assert!(c.loads.fixed_points.contains(&(0.0, 0.5)));
        assert_eq!(c.loads.fixed_points.len(), 4);
    }

    #[test]
    fn case10_sixteen_loads_center_fixed() {
        let c = builtin_case("case10", DEFAULT_LINE_POINTS).unwrap();
        assert_eq!(c.loads.point_loads.len(), 16);
        assert_eq!(c.loads.fixed_points, vec![(0.5, 0.5)]);
        let g1 = c
            .loads
            .point_loads
            .iter()
            .filter(|(_, _, f)| f[2] == -100.0)
            .count();
        assert_eq!(g1, 4);
    }

    #[test]
    fn all_cases_load_and_validate() {
        for name in CASE_NAMES {
            let c = builtin_case(name, DEFAULT_LINE_POINTS).unwrap();
            validate_case(&c).unwrap();
        }
        assert!(builtin_case("case11", DEFAULT_LINE_POINTS).is_none());
    }

    #[test]
    fn line_loads_total_magnitude() {
        let c = builtin_case("case3", 33).unwrap();
        assert_eq!(c.loads.point_loads.len(), 66);
        let total: f64 = c.loads.point_loads.iter().map(|(_, _, f)| -f[2]).sum();
        assert!((total - 20.0).abs() < 1e-12);
    }

    #[test]
    fn case_file_round_trip() {
        let text = "\
name = demo
geometry = hypar
vstar = 0.4
load = 0.5 0.5 0 0 -10  # center
fixed = 0 0
fixed = 1 1
";
        let c = parse_case_file(text).unwrap();
        assert_eq!(c.name, "demo");
        assert_eq!(c.geometry, AnalyticSurface::Hypar);
        assert_eq!(c.loads.point_loads.len(), 1);
        assert_eq!(c.loads.fixed_points.len(), 2);
        let bad = parse_case_file("loads = 1 2 3");
        assert!(bad.is_err());
        let msg = format!("{}", bad.unwrap_err());
        assert!(msg.contains("line 1"), "{}", msg);
    }
}
