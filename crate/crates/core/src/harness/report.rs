use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cpg::format_sig17;
use crate::fitness::{evaluate_fitness, DirectionSpec, FitnessParams, Trajectory};

use super::plan::Learner;
use super::run::{read_text, TRACE_HEADER};
use super::svg::{direction_color, learner_dash, line_chart, Series};
use super::HarnessError;

/// The parts of a finished run that reports consume.
#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub robot: String,
    pub direction: f64,
    pub learner: Learner,
    pub repetition: usize,
    pub best_so_far: Vec<f64>,
    pub best_delta: Vec<f64>,
    pub best_speed: Vec<f64>,
    pub best_trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReportOptions {
    /// Also re-score every best trajectory under each other direction.
    pub cross_direction: bool,
    pub fitness: FitnessParams,
}

fn bad(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Read one run directory.
pub fn load_run(
    dir: &Path,
    robot: &str,
    direction: f64,
    learner: Learner,
    repetition: usize,
) -> Result<RunData, HarnessError> {
    let trace_path = dir.join("trace.csv");
    let text = read_text(&trace_path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(TRACE_HEADER) {
        return Err(bad(&trace_path, "unexpected trace header"));
    }
    let mut data = RunData {
        robot: robot.to_string(),
        direction,
        learner,
        repetition,
        best_so_far: vec![],
        best_delta: vec![],
        best_speed: vec![],
        best_trajectory: None,
    };
    for (i, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(&trace_path, format!("row {}: not numeric", i + 1)))?;
        if f.len() != 7 {
            return Err(bad(
                &trace_path,
                format!("row {}: expected 7 columns", i + 1),
            ));
        }
        data.best_so_far.push(f[2]);
        data.best_delta.push(f[5]);
        data.best_speed.push(f[6]);
    }
    let traj_path = dir.join("best_trajectory.csv");
    if traj_path.exists() {
        let t = read_text(&traj_path)?;
        data.best_trajectory =
            Some(Trajectory::from_csv(&t).map_err(|e| bad(&traj_path, e.to_string()))?);
    }
    Ok(data)
}

fn sorted_dirs(path: &Path) -> Result<Vec<(String, PathBuf)>, HarnessError> {
    let mut out = vec![];
    for entry in fs::read_dir(path).map_err(|e| HarnessError::io(path, e))? {
        let entry = entry.map_err(|e| HarnessError::io(path, e))?;
        if entry.path().is_dir() {
            out.push((
                entry.file_name().to_string_lossy().into_owned(),
                entry.path(),
            ));
        }
    }
    out.sort();
    Ok(out)
}

/// Collect every run under `out/<robot>/<direction>/<learner>/rep<k>/`.
/// Runs without a readable trace are skipped with a warning.
pub fn scan_runs(out: &Path) -> Result<Vec<RunData>, HarnessError> {
    let mut runs = vec![];
    for (robot, robot_dir) in sorted_dirs(out)? {
        if robot == "reports" {
            continue;
        }
        for (dname, ddir) in sorted_dirs(&robot_dir)? {
            let Ok(direction) = dname.parse::<f64>() else {
                continue;
            };
            for (lname, ldir) in sorted_dirs(&ddir)? {
                let Ok(learner) = lname.parse::<Learner>() else {
                    continue;
                };
                for (rname, rdir) in sorted_dirs(&ldir)? {
                    let Some(rep) = rname.strip_prefix("rep").and_then(|r| r.parse().ok()) else {
                        continue;
                    };
                    match load_run(&rdir, &robot, direction, learner, rep) {
                        Ok(r) if !r.best_so_far.is_empty() => runs.push(r),
                        Ok(_) => log::warn!("{}: empty trace, skipped", rdir.display()),
                        Err(e) => log::warn!("missing trace, skipped: {e}"),
                    }
                }
            }
        }
    }
    runs.sort_by(|a, b| {
        a.robot
            .cmp(&b.robot)
            .then(b.direction.total_cmp(&a.direction))
            .then(a.learner.cmp(&b.learner))
            .then(a.repetition.cmp(&b.repetition))
    });
    Ok(runs)
}

/// Pointwise mean, truncated to the shortest series.
fn pointwise_mean(series: &[&[f64]]) -> Vec<f64> {
    let n = series.iter().map(|s| s.len()).min().unwrap_or(0);
    (0..n)
        .map(|i| series.iter().map(|s| s[i]).sum::<f64>() / series.len() as f64)
        .collect()
}

/// Runs grouped by (direction, learner), in report order.
fn groups(runs: &[RunData]) -> Vec<(f64, Learner, Vec<&RunData>)> {
    let mut out: Vec<(f64, Learner, Vec<&RunData>)> = vec![];
    for r in runs {
        match out.last_mut() {
            Some((d, l, g)) if *d == r.direction && *l == r.learner => g.push(r),
            _ => out.push((r.direction, r.learner, vec![r])),
        }
    }
    out
}

fn label(direction: f64, learner: Learner) -> String {
    format!("{direction}\u{b0} {learner}")
}

fn styled(direction: f64, learner: Learner, points: Vec<(f64, f64)>) -> Series {
    Series {
        label: label(direction, learner),
        color: direction_color(direction).into(),
        dash: learner_dash(learner).map(String::from),
        points,
    }
}

struct Written(Vec<PathBuf>);

impl Written {
    fn file(&mut self, path: PathBuf, body: &str) -> Result<(), HarnessError> {
        fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
        self.0.push(path);
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn curve_report(
    w: &mut Written,
    dir: &Path,
    robot: &str,
    kind: &str,
    column: &str,
    note: Option<&str>,
    y_label: &str,
    runs: &[RunData],
    pick: fn(&RunData) -> &[f64],
) -> Result<(), HarnessError> {
    let mut csv = String::new();
    if let Some(n) = note {
        let _ = writeln!(csv, "# {n}");
    }
    let _ = writeln!(csv, "direction_deg,learner,eval_index,{column},runs");
    let mut series = vec![];
    for (d, l, g) in groups(runs) {
        let parts: Vec<&[f64]> = g.iter().map(|r| pick(r)).collect();
        let mean = pointwise_mean(&parts);
        for (i, v) in mean.iter().enumerate() {
            let _ = writeln!(csv, "{d},{l},{},{},{}", i + 1, format_sig17(*v), g.len());
        }
        series.push(styled(
            d,
            l,
            mean.iter()
                .enumerate()
                .map(|(i, v)| ((i + 1) as f64, *v))
                .collect(),
        ));
    }
    w.file(dir.join(format!("{robot}_{kind}.csv")), &csv)?;
    let svg = line_chart(
        &format!("{robot}: {y_label}"),
        "evaluation",
        y_label,
        &series,
        false,
    );
    w.file(dir.join(format!("{robot}_{kind}.svg")), &svg)
}

/// Mean of the best trajectories of the top three runs in a group.
fn top_trajectory(group: &[&RunData]) -> Option<Vec<(f64, f64, f64)>> {
    let mut ranked: Vec<&RunData> = group
        .iter()
        .copied()
        .filter(|r| r.best_trajectory.is_some())
        .collect();
    ranked.sort_by(|a, b| {
        let fa = a.best_so_far.last().copied().unwrap_or(f64::NEG_INFINITY);
        let fb = b.best_so_far.last().copied().unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa).then(a.repetition.cmp(&b.repetition))
    });
    ranked.truncate(3);
    let trajs: Vec<&Trajectory> = ranked
        .iter()
        .filter_map(|r| r.best_trajectory.as_ref())
        .collect();
    let n = trajs.iter().map(|t| t.samples().len()).min()?;
    let k = trajs.len() as f64;
    Some(
        (0..n)
            .map(|i| {
                let t = trajs[0].samples()[i].t;
                let x = trajs.iter().map(|tr| tr.samples()[i].x).sum::<f64>() / k;
                let y = trajs.iter().map(|tr| tr.samples()[i].y).sum::<f64>() / k;
                (t, x, y)
            })
            .collect(),
    )
}

fn trajectory_report(
    w: &mut Written,
    dir: &Path,
    robot: &str,
    runs: &[RunData],
) -> Result<(), HarnessError> {
    let mut csv = String::from("# positions in metres; top three controllers averaged\n");
    csv.push_str("direction_deg,learner,t,x,y\n");
    let mut series = vec![];
    for (d, l, g) in groups(runs) {
        let Some(mean) = top_trajectory(&g) else {
            continue;
        };
        for (t, x, y) in &mean {
            let _ = writeln!(
                csv,
                "{d},{l},{},{},{}",
                format_sig17(*t),
                format_sig17(*x),
                format_sig17(*y)
            );
        }
        series.push(styled(d, l, mean.iter().map(|p| (p.1, p.2)).collect()));
    }
    w.file(dir.join(format!("{robot}_trajectories.csv")), &csv)?;
    let svg = line_chart(
        &format!("{robot}: trajectories of the top three controllers"),
        "x (m)",
        "y (m)",
        &series,
        true,
    );
    w.file(dir.join(format!("{robot}_trajectories.svg")), &svg)
}

fn cross_report(
    w: &mut Written,
    dir: &Path,
    robot: &str,
    runs: &[RunData],
    params: FitnessParams,
) -> Result<(), HarnessError> {
    let mut directions: Vec<f64> = runs.iter().map(|r| r.direction).collect();
    directions.sort_by(|a, b| b.total_cmp(a));
    directions.dedup();
    let mut csv = String::from("direction_deg,learner,repetition,scored_direction_deg,fitness\n");
    for r in runs {
        let Some(t) = &r.best_trajectory else {
            continue;
        };
        for &d in &directions {
            let f = evaluate_fitness(t, DirectionSpec::from_degrees(d), params).fitness;
            let _ = writeln!(
                csv,
                "{},{},{},{d},{}",
                r.direction,
                r.learner,
                r.repetition,
                format_sig17(f)
            );
        }
    }
    w.file(dir.join(format!("{robot}_cross.csv")), &csv)
}

/// Write per-robot fitness, speed, deviation and trajectory reports (CSV
/// and SVG) into `out/reports/`. Returns the written paths.
pub fn emit_reports(out: &Path, opts: &ReportOptions) -> Result<Vec<PathBuf>, HarnessError> {
    let runs = scan_runs(out)?;
    if runs.is_empty() {
        return Err(bad(out, "no completed runs found"));
    }
    let dir = out.join("reports");
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let mut w = Written(vec![]);
    let mut start = 0;
    while start < runs.len() {
        let robot = runs[start].robot.clone();
        let end = start
            + runs[start..]
                .iter()
                .take_while(|r| r.robot == robot)
                .count();
        let group = &runs[start..end];
        curve_report(
            &mut w,
            &dir,
            &robot,
            "fitness",
            "mean_best_so_far",
            None,
            "best fitness",
            group,
            |r| &r.best_so_far,
        )?;
        curve_report(
            &mut w,
            &dir,
            &robot,
            "speed",
            "mean_best_speed",
            Some("metres per minute, best controller so far"),
            "speed (m/min)",
            group,
            |r| &r.best_speed,
        )?;
        curve_report(
            &mut w,
            &dir,
            &robot,
            "deviation",
            "mean_best_delta",
            Some("radians, best controller so far"),
            "deviation (rad)",
            group,
            |r| &r.best_delta,
        )?;
        trajectory_report(&mut w, &dir, &robot, group)?;
        if opts.cross_direction {
            cross_report(&mut w, &dir, &robot, group, opts.fitness)?;
        }
        start = end;
    }
    Ok(w.0)
}
