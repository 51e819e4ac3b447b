//! The subcommands, returning an exit code and writing reports to the given sinks.

use std::io::Write;
use std::path::Path;

use hypertess::decompose::{decompose, local_cell, LocalCellInput};
use hypertess::hyperball::check_packing;
use hypertess::volume::{
    density_report, max_height, optimize_regular_family, r_for_p, regular_truncated_tetrahedron,
    sweep, DensityReport,
};
use hypertess::{point_plane_distance, PlaneRelation};
use serde::Serialize;

use crate::error::{exit, CliError};
use crate::obj::to_obj;
use crate::scene::{read_scene, VERSION};
use crate::trace::{read_trace, TraceFile};

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub version: u32,
    pub passed: bool,
    pub admissible: bool,
    pub ball_count: usize,
    pub height: Option<f64>,
    /// Smallest base-plane distance over all pairs; `null` with fewer than two balls.
    pub min_separation: Option<f64>,
    pub violations: Vec<ViolationRecord>,
    /// Smallest distance from the vertex to a base plane, minus the height.
    pub vertex_clearance: Option<f64>,
    pub vertex_outside_balls: bool,
}

#[derive(Debug, Serialize)]
pub struct ViolationRecord {
    pub i: usize,
    pub j: usize,
    pub labels: [String; 2],
    pub relation: String,
}

pub fn verify_input(input: &LocalCellInput) -> Result<VerifyReport, CliError> {
    let report = check_packing(&input.balls);
    let mut clearance: Option<f64> = None;
    for b in &input.balls.balls {
        let d = point_plane_distance(&input.vertex, &b.base)
            .map_err(|e| CliError::InvalidScene(e.to_string()))?
            - b.height;
        clearance = Some(clearance.map_or(d, |c| c.min(d)));
    }
    let vertex_outside_balls =
        clearance.map_or(true, |c| c >= -1e-9 * input.balls.height().unwrap_or(1.0));
    let labels = &input.balls.labels;
    let violations = report
        .violations
        .iter()
        .map(|v| ViolationRecord {
            i: v.i,
            j: v.j,
            labels: [labels[v.i].clone(), labels[v.j].clone()],
            relation: match v.relation {
                PlaneRelation::Ultraparallel(d) => format!("ultraparallel at distance {d}"),
                other => other.to_string(),
            },
        })
        .collect();
    Ok(VerifyReport {
        version: VERSION,
        passed: report.admissible && vertex_outside_balls,
        admissible: report.admissible,
        ball_count: input.balls.balls.len(),
        height: input.balls.height(),
        min_separation: Some(report.min_separation).filter(|d| d.is_finite()),
        violations,
        vertex_clearance: clearance,
        vertex_outside_balls,
    })
}

pub fn cmd_verify(scene: &Path, json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let input = read_scene(scene)?.to_input()?;
    let r = verify_input(&input)?;
    let text = if json {
        json_line(&r)
    } else {
        let mut s = String::new();
        s += &format!("hyperballs: {}\n", r.ball_count);
        s += &format!(
            "height: {}\n",
            r.height.map_or("-".into(), |h| h.to_string())
        );
        s += &format!(
            "min separation: {}\n",
            r.min_separation.map_or("-".into(), |d| d.to_string())
        );
        for v in &r.violations {
            s += &format!(
                "violation: {} / {}: {}\n",
                v.labels[0], v.labels[1], v.relation
            );
        }
        s += &format!(
            "vertex outside every hyperball: {}\n",
            yes_no(r.vertex_outside_balls)
        );
        s += &format!("admissible: {}\n", yes_no(r.passed));
        s
    };
    let _ = out.write_all(text.as_bytes());
    Ok(if r.passed {
        exit::OK
    } else {
        exit::VERIFICATION_FAILED
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Run the full pipeline on a scene: validate, build the local cell, decompose.
pub fn decompose_scene(scene: &Path, tol: f64) -> Result<TraceFile, CliError> {
    let input = read_scene(scene)?.to_input()?;
    let input = LocalCellInput::new(input.vertex, input.balls)?;
    let cell = local_cell(&input)?;
    let trace = decompose(&cell, &input.balls)?;
    TraceFile::from_trace(&trace, &input.vertex, tol)
}

pub fn cmd_decompose(
    scene: &Path,
    output: &Path,
    tol: f64,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let trace = decompose_scene(scene, tol)?;
    write_file(output, &trace.to_json())?;
    let s = &trace.summary;
    let _ = writeln!(out, "initial N: {}", s.initial_n);
    let _ = writeln!(out, "cuts: {}", s.cuts);
    let _ = writeln!(out, "splits: {}", s.splits);
    let _ = writeln!(out, "leaves: {}", s.leaves);
    let _ = writeln!(
        out,
        "all leaves truncated tetrahedra: {}",
        yes_no(s.all_leaves_tt)
    );
    let _ = writeln!(out, "lemma checks passed: {}", yes_no(s.lemma_passed));
    Ok(exit::OK)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    P(u32),
    R(f64),
    Optimize,
    Sweep {
        r_min: f64,
        r_max: f64,
        steps: usize,
    },
}

#[derive(Debug, Serialize)]
struct DensityJson {
    version: u32,
    family: &'static str,
    r: f64,
    h: f64,
    density: f64,
    cell_volume: f64,
    piece_volume: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dh_gradient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_confirms: Option<bool>,
}

fn report_at(r: f64, h: Option<f64>, tol: f64) -> Result<DensityReport, CliError> {
    let cell = regular_truncated_tetrahedron(r)?;
    let h = h.unwrap_or_else(|| max_height(&cell));
    if h == 0.0 {
        let cell_volume = hypertess::volume::polytope_volume(cell.polyhedron(), tol)?.value;
        return Ok(DensityReport {
            r,
            h,
            density: 0.0,
            cell_volume,
            piece_volume: 0.0,
        });
    }
    Ok(density_report(&cell, h, tol)?)
}

pub fn cmd_density(
    mode: DensityMode,
    h: Option<f64>,
    tol: f64,
    json: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let (report, extra) = match mode {
        DensityMode::P(p) => (report_at(r_for_p(p)?, h, tol)?, None),
        DensityMode::R(r) => (report_at(r, h, tol)?, None),
        DensityMode::Optimize => {
            if h.is_some() {
                return Err(CliError::InvalidScene(
                    "--h cannot be combined with --optimize".into(),
                ));
            }
            let o = optimize_regular_family(tol)?;
            (o.report, Some((o.dh_gradient, o.grid_confirms)))
        }
        DensityMode::Sweep {
            r_min,
            r_max,
            steps,
        } => {
            let rows = sweep(r_min, r_max, steps, h, tol)?;
            let mut s = String::from("r,h,density,cell_volume,piece_volume\n");
            for d in rows {
                s += &format!(
                    "{},{},{},{},{}\n",
                    d.r, d.h, d.density, d.cell_volume, d.piece_volume
                );
            }
            let _ = out.write_all(s.as_bytes());
            return Ok(exit::OK);
        }
    };
    if json {
        let j = DensityJson {
            version: VERSION,
            family: "regular-tt",
            r: report.r,
            h: report.h,
            density: report.density,
            cell_volume: report.cell_volume,
            piece_volume: report.piece_volume,
            dh_gradient: extra.map(|e| e.0),
            grid_confirms: extra.map(|e| e.1),
        };
        let _ = out.write_all(json_line(&j).as_bytes());
    } else {
        let _ = writeln!(out, "family: regular-tt");
        let _ = writeln!(out, "r: {}", report.r);
        let _ = writeln!(out, "h: {}", report.h);
        let _ = writeln!(out, "density: {}", report.density);
        let _ = writeln!(out, "cell_volume: {}", report.cell_volume);
        let _ = writeln!(out, "piece_volume: {}", report.piece_volume);
        if let Some((g, c)) = extra {
            let _ = writeln!(out, "dh_gradient: {g}");
            let _ = writeln!(out, "grid_confirms: {}", yes_no(c));
        }
    }
    Ok(exit::OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Obj,
    Json,
}

pub fn cmd_export(trace: &Path, format: ExportFormat, output: &Path) -> Result<i32, CliError> {
    let t = read_trace(trace)?;
    let text = match format {
        ExportFormat::Obj => to_obj(&t),
        ExportFormat::Json => t.to_json(),
    };
    write_file(output, &text)?;
    Ok(exit::OK)
}
