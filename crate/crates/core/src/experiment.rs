//! Batch runs behind the command-line tool: each command writes CSV tables,
//! SVG plots, a `manifest.json` with SHA-256 checksums of every output, and a
//! separate `timings.json` (kept out of the manifest so reruns are
//! byte-identical).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::carleman::{
    build_cutoff, carleman_ratio_sweep, carleman_ratio_sweep_weighted, decay_factor,
    divergence_identity_residual, CarlemanSweep, CarlemanWeight, TestFunction,
};
use crate::config::ExperimentConfig;
use crate::eigen::{smallest_dirichlet_eigenvalue, EigenResult};
use crate::equilibrium::{solve_equilibrium, EquilibriumSolution, VorticityProfile};
use crate::error::{Error, Result};
use crate::geometry::ChannelGrid;
use crate::homology::{harmonic_generator, homology_projection};
use crate::operators::gradient;
use crate::render::render_contours;
use crate::topology::{
    classify_field, CenterlineReport, CriticalSet, Orbit, SampleClass, TopologyOptions,
    TopologyReport, TraceOptions,
};

/// Delimited table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }
    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }
}

/// Shortest round-trip decimal, never in exponent form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn export_table(table: &Table, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn eigen_table(rows: &[(f64, EigenResult)]) -> Table {
    let mut t = Table::new(&["eps", "lambda1", "residual", "iterations"]);
    for (eps, r) in rows {
        t.push(vec![num(*eps), num(r.lambda1), num(r.residual), r.iterations.to_string()]);
    }
    t
}

/// One row per node: `i, j, x, y, psi, u1, u2, omega`.
pub fn solution_table(sol: &EquilibriumSolution) -> Table {
    let g = sol.grid();
    let mut t = Table::new(&["i", "j", "x", "y", "psi", "u1", "u2", "omega"]);
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            let (x, y) = g.to_physical(g.x(i), g.eta(j));
            t.push(vec![
                i.to_string(),
                j.to_string(),
                num(x),
                num(y),
                num(sol.psi.get(i, j)),
                num(sol.u.0.get(i, j)),
                num(sol.u.1.get(i, j)),
                num(sol.omega.get(i, j)),
            ]);
        }
    }
    t
}

pub fn orbit_table(orbits: &[Orbit]) -> Table {
    let mut t = Table::new(&[
        "orbit",
        "seed_x",
        "seed_y",
        "closed",
        "x_winding",
        "contractible",
        "level",
        "max_drift",
        "points",
    ]);
    for (k, o) in orbits.iter().enumerate() {
        t.push(vec![
            k.to_string(),
            num(o.seed.0),
            num(o.seed.1),
            o.closed.to_string(),
            o.x_winding.to_string(),
            o.contractible().to_string(),
            num(o.level),
            num(o.max_drift),
            o.points.len().to_string(),
        ]);
    }
    t
}

/// Polylines for plotting: `orbit, k, x, y`.
pub fn orbit_points_table(orbits: &[Orbit]) -> Table {
    let mut t = Table::new(&["orbit", "k", "x", "y"]);
    for (n, o) in orbits.iter().enumerate() {
        for (k, p) in o.points.iter().enumerate() {
            t.push(vec![n.to_string(), k.to_string(), num(p.0), num(p.1)]);
        }
    }
    t
}

/// Isolated points, then critical lines (`kind = line`, `y` holds the reference η).
pub fn critical_table(set: &CriticalSet) -> Table {
    let mut t = Table::new(&[
        "kind",
        "x",
        "y",
        "psi",
        "hessian_det",
        "gradient_norm",
        "converged",
    ]);
    for p in &set.points {
        t.push(vec![
            format!("{:?}", p.kind).to_lowercase(),
            num(p.position.0),
            num(p.position.1),
            num(p.psi),
            num(p.hessian_det),
            num(p.gradient_norm),
            p.converged.to_string(),
        ]);
    }
    for l in &set.lines {
        t.push(vec![
            "line".into(),
            String::new(),
            num(l.eta),
            num(l.psi),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    t
}

fn class_name(c: &SampleClass) -> String {
    match c {
        SampleClass::Stagnant => "stagnant".into(),
        SampleClass::Contractible => "contractible".into(),
        SampleClass::Wrapping { x_winding } => format!("wrapping({x_winding})"),
        SampleClass::Separatrix => "separatrix".into(),
        SampleClass::Failed { error } => format!("failed({error})"),
    }
}

pub fn centerline_table(rep: &CenterlineReport) -> Table {
    let mut t = Table::new(&["x", "y", "u2_abs", "class"]);
    for s in &rep.samples {
        t.push(vec![num(s.point.0), num(s.point.1), num(s.u2_abs), class_name(&s.class)]);
    }
    t
}

pub fn sweep_table(sweeps: &[(usize, CarlemanSweep)], cutoff_c: f64) -> Table {
    let mut t = Table::new(&[
        "test",
        "m",
        "lhs",
        "rhs",
        "ratio",
        "log_lhs",
        "log_rhs",
        "log_shift",
        "decay_factor",
    ]);
    for (id, s) in sweeps {
        for r in &s.rows {
            t.push(vec![
                id.to_string(),
                num(r.m),
                num(r.lhs),
                num(r.rhs),
                opt(r.ratio),
                num(r.log_lhs),
                num(r.log_rhs),
                num(r.log_shift),
                num(decay_factor(r.m, cutoff_c)),
            ]);
        }
    }
    t
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunRecord {
    pub name: String,
    pub ok: bool,
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| !r.ok).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Eigen,
    Topology,
    Carleman,
    Matrix,
    Render,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Eigen => "eigen",
            Self::Topology => "topology",
            Self::Carleman => "carleman",
            Self::Matrix => "matrix",
            Self::Render => "render",
        }
    }
}

/// Output of one unit of work (a cell, an ε value, a test function).
struct Unit {
    record: RunRecord,
    files: Vec<PathBuf>,
    seconds: f64,
}

struct Writer<'a> {
    root: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(root: &'a Path) -> Self {
        Self {
            root,
            files: Vec::new(),
        }
    }
    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        export_table(t, &self.root.join(name))?;
        self.files.push(name.into());
        Ok(())
    }
    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(self.root.join(name), text + "\n")?;
        self.files.push(name.into());
        Ok(())
    }
    fn svg(&mut self, name: &str, sol: &EquilibriumSolution, orbits: &[Orbit]) -> Result<()> {
        render_contours(&sol.psi, orbits, &self.root.join(name))?;
        self.files.push(name.into());
        Ok(())
    }
}

/// Runs `body`, turning non-config errors into a failed record.
fn unit(name: String, body: impl FnOnce(&mut Writer, &mut BTreeMap<String, f64>) -> Result<()>, root: &Path) -> Result<Unit> {
    let start = Instant::now();
    let mut w = Writer::new(root);
    let mut metrics = BTreeMap::new();
    let outcome = body(&mut w, &mut metrics);
    let error = match outcome {
        Ok(()) => None,
        Err(e @ Error::Config(_)) => return Err(e),
        Err(e) => {
            log::error!("{name}: {e}");
            Some(e.to_string())
        }
    };
    Ok(Unit {
        record: RunRecord {
            name,
            ok: error.is_none(),
            error,
            metrics,
        },
        files: w.files,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn eps_tag(eps: f64) -> String {
    format!("eps{eps:.4}")
}

fn grid_for(cfg: &ExperimentConfig, eps: f64) -> Result<Arc<ChannelGrid>> {
    Ok(Arc::new(ChannelGrid::new(
        cfg.shape.scaled(eps),
        cfg.grid.nx,
        cfg.grid.ny,
    )?))
}

fn topology_options(cfg: &ExperimentConfig) -> TopologyOptions {
    TopologyOptions {
        trace: TraceOptions::default(),
        centerline_samples: cfg.topology.centerline_samples,
        seed_lattice: (cfg.topology.seed_columns, cfg.topology.seed_rows),
    }
}

/// Eigenvalue plus the Arnold check when the slope matters.
fn arnold_gate(
    cfg: &ExperimentConfig,
    grid: &Arc<ChannelGrid>,
    v: VorticityProfile,
) -> Result<Option<f64>> {
    if let VorticityProfile::Affine { .. } = v {
        let l = smallest_dirichlet_eigenvalue(grid, cfg.tolerances.eigen)?.lambda1;
        cfg.check_arnold(v, l)?;
        return Ok(Some(l));
    }
    Ok(None)
}

fn topology_metrics(m: &mut BTreeMap<String, f64>, r: &TopologyReport) {
    use crate::topology::CriticalKind::*;
    m.insert("islands".into(), r.island_count() as f64);
    m.insert("wrapping_orbits".into(), r.wrapping_orbits as f64);
    m.insert("contractible_orbits".into(), r.contractible_orbits as f64);
    m.insert("failed_traces".into(), r.failed_traces as f64);
    m.insert("elliptic".into(), r.critical.count(Elliptic) as f64);
    m.insert("hyperbolic".into(), r.critical.count(Hyperbolic) as f64);
    m.insert("critical_lines".into(), r.critical.lines.len() as f64);
    m.insert("symmetry_residual".into(), r.symmetry_residual);
    m.insert("min_speed".into(), r.min_speed);
    m.insert("centerline_tested".into(), r.centerline.tested() as f64);
    m.insert("centerline_contractible".into(), r.centerline.contractible() as f64);
    m.insert("centerline_wrapping".into(), r.centerline.wrapping() as f64);
    if let Some(f) = r.centerline.contractible_fraction() {
        m.insert("centerline_fraction".into(), f);
    }
}

fn solve_unit(cfg: &ExperimentConfig, eps: f64, root: &Path) -> Result<Unit> {
    let tag = eps_tag(eps);
    unit(
        format!("solve_{tag}"),
        |w, m| {
            let g = grid_for(cfg, eps)?;
            arnold_gate(cfg, &g, cfg.vorticity)?;
            let sol = solve_equilibrium(&g, cfg.vorticity, cfg.gap, cfg.tolerances.newton)?;
            let gen = harmonic_generator(&g)?;
            m.insert("eps".into(), eps);
            m.insert("gap".into(), sol.homology_gap);
            m.insert("pde_residual".into(), sol.pde_residual);
            m.insert("newton_iterations".into(), sol.newton_iterations as f64);
            m.insert("projection".into(), homology_projection(&sol.u, &gen)?);
            m.insert(
                "symmetry_residual".into(),
                crate::topology::symmetry_residual(&sol.psi),
            );
            w.table(&format!("solution_{tag}.csv"), &solution_table(&sol))
        },
        root,
    )
}

fn eigen_unit(cfg: &ExperimentConfig, eps: f64, root: &Path) -> Result<(Unit, Option<EigenResult>)> {
    let mut out = None;
    let u = unit(
        format!("eigen_{}", eps_tag(eps)),
        |_, m| {
            let g = grid_for(cfg, eps)?;
            let r = smallest_dirichlet_eigenvalue(&g, cfg.tolerances.eigen)?;
            m.insert("eps".into(), eps);
            m.insert("lambda1".into(), r.lambda1);
            m.insert("residual".into(), r.residual);
            m.insert("iterations".into(), r.iterations as f64);
            out = Some(r);
            Ok(())
        },
        root,
    )?;
    Ok((u, out))
}

fn topology_unit(cfg: &ExperimentConfig, eps: f64, root: &Path, render_only: bool) -> Result<Unit> {
    let tag = eps_tag(eps);
    let name = if render_only { "render" } else { "topology" };
    unit(
        format!("{name}_{tag}"),
        |w, m| {
            let g = grid_for(cfg, eps)?;
            arnold_gate(cfg, &g, cfg.vorticity)?;
            let sol = solve_equilibrium(&g, cfg.vorticity, cfg.gap, cfg.tolerances.newton)?;
            let rep = classify_field(&sol.psi, topology_options(cfg));
            m.insert("eps".into(), eps);
            topology_metrics(m, &rep);
            let islands: Vec<Orbit> = rep.orbits.iter().filter(|o| o.contractible()).cloned().collect();
            w.svg(&format!("contours_{tag}.svg"), &sol, &islands)?;
            if !render_only {
                w.table(&format!("orbits_{tag}.csv"), &orbit_table(&rep.orbits))?;
                w.table(&format!("orbit_points_{tag}.csv"), &orbit_points_table(&rep.orbits))?;
                w.table(&format!("critical_{tag}.csv"), &critical_table(&rep.critical))?;
                w.table(&format!("centerline_{tag}.csv"), &centerline_table(&rep.centerline))?;
                w.json(&format!("topology_{tag}.json"), &rep)?;
            }
            Ok(())
        },
        root,
    )
}

fn carleman_units(cfg: &ExperimentConfig, root: &Path) -> Result<Vec<Unit>> {
    let cc = &cfg.carleman;
    let g = grid_for(cfg, cc.eps)?;
    let weight = CarlemanWeight::new(&g, cc.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tests: Vec<Result<TestFunction>> = (0..cc.test_functions)
        .map(|_| TestFunction::random(g.clone(), &mut rng))
        .collect();
    let mut sweeps = Vec::new();
    let mut identity = Table::new(&["test", "m", "residual", "relative_residual", "boundary_flux"]);
    let mut units = Vec::new();
    for (k, t) in tests.into_iter().enumerate() {
        let mut sweep = None;
        let mut rows = Vec::new();
        let u = unit(
            format!("carleman_test{k}"),
            |_, m| {
                let t = t?;
                let s = carleman_ratio_sweep(&t, &weight, &cc.m)?;
                for &mm in &cc.m {
                    let chk = divergence_identity_residual(&t, &weight, mm)?;
                    rows.push(vec![
                        k.to_string(),
                        num(mm),
                        num(chk.residual),
                        num(chk.residual / chk.scale),
                        num(chk.boundary_flux),
                    ]);
                }
                if let Some(c) = s.c_obs() {
                    m.insert("c_obs".into(), c);
                }
                if let Some(sl) = s.trend_slope() {
                    m.insert("trend_slope".into(), sl);
                }
                sweep = Some(s);
                Ok(())
            },
            root,
        )?;
        if let Some(s) = sweep {
            sweeps.push((k, s));
        }
        for r in rows {
            identity.push(r);
        }
        units.push(u);
    }
    let mut cutoff_sweep = None;
    units.push(unit(
        "carleman_cutoff".into(),
        |_, m| {
            let sol = solve_equilibrium(&g, cfg.vorticity, cfg.gap, cfg.tolerances.newton)?;
            let chi = build_cutoff(&weight, cc.cutoff_c)?;
            let (psi_x, _) = gradient(&sol.psi);
            let base = chi.zip_with(&psi_x, |a, b| a * b)?;
            let s = carleman_ratio_sweep_weighted(&base, &weight, &cc.m)?;
            if let Some(c) = s.c_obs() {
                m.insert("c_obs".into(), c);
            }
            cutoff_sweep = Some(s);
            Ok(())
        },
        root,
    )?);
    let mut w = Writer::new(root);
    w.table("carleman_sweep.csv", &sweep_table(&sweeps, cc.cutoff_c))?;
    w.table("carleman_identity.csv", &identity)?;
    let cut: Vec<(usize, CarlemanSweep)> = cutoff_sweep.into_iter().map(|s| (0, s)).collect();
    w.table("carleman_cutoff.csv", &sweep_table(&cut, cc.cutoff_c))?;
    units.push(Unit {
        record: RunRecord {
            name: "carleman_tables".into(),
            ok: true,
            error: None,
            metrics: BTreeMap::new(),
        },
        files: w.files,
        seconds: 0.0,
    });
    Ok(units)
}

/// One cell of the `{flat, curved} × {gap 0, current}` matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatrixCell {
    pub name: &'static str,
    pub eps: f64,
    pub gap: f64,
    pub vorticity: VorticityProfile,
}

pub fn matrix_cells(cfg: &ExperimentConfig) -> [MatrixCell; 4] {
    let m = &cfg.matrix;
    [
        MatrixCell {
            name: "flat_gap0",
            eps: 0.0,
            gap: 0.0,
            vorticity: m.vorticity_zero,
        },
        MatrixCell {
            name: "curved_gap0",
            eps: m.eps_curved,
            gap: 0.0,
            vorticity: m.vorticity_zero,
        },
        MatrixCell {
            name: "flat_current",
            eps: 0.0,
            gap: m.gap_current,
            vorticity: m.vorticity_current,
        },
        MatrixCell {
            name: "curved_current",
            eps: m.eps_current,
            gap: m.gap_current,
            vorticity: m.vorticity_current,
        },
    ]
}

fn matrix_unit(cfg: &ExperimentConfig, cell: MatrixCell, root: &Path) -> Result<Unit> {
    unit(
        cell.name.to_string(),
        |w, m| {
            let g = grid_for(cfg, cell.eps)?;
            let eig = smallest_dirichlet_eigenvalue(&g, cfg.tolerances.eigen)?;
            cfg.check_arnold(cell.vorticity, eig.lambda1)?;
            let sol = solve_equilibrium(&g, cell.vorticity, cell.gap, cfg.tolerances.newton)?;
            let gen = harmonic_generator(&g)?;
            let rep = classify_field(&sol.psi, topology_options(cfg));
            m.insert("eps".into(), cell.eps);
            m.insert("gap".into(), cell.gap);
            m.insert("lambda1".into(), eig.lambda1);
            m.insert("projection".into(), homology_projection(&sol.u, &gen)?);
            m.insert("pde_residual".into(), sol.pde_residual);
            topology_metrics(m, &rep);
            let highlighted: Vec<Orbit> =
                rep.orbits.iter().filter(|o| o.contractible()).cloned().collect();
            w.svg(&format!("{}.svg", cell.name), &sol, &highlighted)?;
            w.table(&format!("{}_orbits.csv", cell.name), &orbit_table(&rep.orbits))?;
            w.table(&format!("{}_critical.csv", cell.name), &critical_table(&rep.critical))?;
            Ok(())
        },
        root,
    )
}

fn matrix_table(records: &[RunRecord]) -> Table {
    let cols = ["eps", "gap", "lambda1", "projection", "islands", "symmetry_residual"];
    let mut header = vec!["cell", "ok"];
    header.extend(cols);
    let mut t = Table::new(&header);
    for r in records {
        let mut row = vec![r.name.clone(), r.ok.to_string()];
        row.extend(cols.iter().map(|c| opt(r.metrics.get(*c).copied())));
        t.push(row);
    }
    t
}

/// Runs the four-cell experiment matrix and writes its manifest.
pub fn run_island_matrix(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    run_command(Command::Matrix, cfg, out)
}

pub fn run_command(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let units: Vec<Unit> = match cmd {
        Command::Solve => par_units(&cfg.eps, |e| solve_unit(cfg, e, out))?,
        Command::Topology => par_units(&cfg.eps, |e| topology_unit(cfg, e, out, false))?,
        Command::Render => par_units(&cfg.eps, |e| topology_unit(cfg, e, out, true))?,
        Command::Eigen => {
            let results: Vec<(Unit, Option<EigenResult>)> = cfg
                .eps
                .par_iter()
                .map(|&e| eigen_unit(cfg, e, out))
                .collect::<Result<_>>()?;
            let rows: Vec<(f64, EigenResult)> = cfg
                .eps
                .iter()
                .zip(&results)
                .filter_map(|(e, (_, r))| r.clone().map(|r| (*e, r)))
                .collect();
            let mut units: Vec<Unit> = results.into_iter().map(|(u, _)| u).collect();
            let mut w = Writer::new(out);
            w.table("eigen.csv", &eigen_table(&rows))?;
            units.push(Unit {
                record: RunRecord {
                    name: "eigen_table".into(),
                    ok: true,
                    error: None,
                    metrics: BTreeMap::new(),
                },
                files: w.files,
                seconds: 0.0,
            });
            units
        }
        Command::Carleman => carleman_units(cfg, out)?,
        Command::Matrix => {
            let cells = matrix_cells(cfg);
            let mut units: Vec<Unit> = cells
                .par_iter()
                .map(|&c| matrix_unit(cfg, c, out))
                .collect::<Result<_>>()?;
            let records: Vec<RunRecord> = units.iter().map(|u| u.record.clone()).collect();
            let mut w = Writer::new(out);
            w.table("matrix.csv", &matrix_table(&records))?;
            units.push(Unit {
                record: RunRecord {
                    name: "matrix_table".into(),
                    ok: true,
                    error: None,
                    metrics: BTreeMap::new(),
                },
                files: w.files,
                seconds: 0.0,
            });
            units
        }
    };
    finish(cmd, cfg, out, units)
}

fn par_units(eps: &[f64], f: impl Fn(f64) -> Result<Unit> + Sync) -> Result<Vec<Unit>> {
    eps.par_iter().map(|&e| f(e)).collect()
}

fn finish(cmd: Command, cfg: &ExperimentConfig, out: &Path, units: Vec<Unit>) -> Result<RunManifest> {
    let mut files = Vec::new();
    let mut timings = BTreeMap::new();
    let mut runs = Vec::new();
    for u in units {
        for f in &u.files {
            let bytes = std::fs::read(out.join(f))?;
            files.push(FileEntry {
                path: f.to_string_lossy().into_owned(),
                bytes: bytes.len() as u64,
                sha256: hex(&Sha256::digest(&bytes)),
            });
        }
        timings.insert(u.record.name.clone(), u.seconds);
        runs.push(u.record);
    }
    // the output location is the caller's business; leaving it out keeps
    // reruns into different directories byte-identical
    let mut config = cfg.clone();
    config.output_dir = PathBuf::new();
    let manifest = RunManifest {
        command: cmd.name().into(),
        config,
        runs,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out.join("manifest.json"), text + "\n")?;
    let text = serde_json::to_string_pretty(&timings).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(out.join("timings.json"), text + "\n")?;
    Ok(manifest)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        export_table(&Table::new(&["eps", "lambda1", "residual", "iterations"]), &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "eps,lambda1,residual,iterations\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-12, -2.5e7, std::f64::consts::PI] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
            assert!(!num(v).contains('e'));
        }
    }

    #[test]
    fn small_eigen_run_writes_checksummed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            eps: vec![0.0, 0.1],
            grid: crate::config::GridConfig { nx: 32, ny: 17 },
            ..ExperimentConfig::default()
        };
        let m = run_command(Command::Eigen, &cfg, dir.path()).unwrap();
        assert_eq!(m.failures(), 0);
        assert_eq!(m.files.len(), 1);
        let text = std::fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(dir.path().join("manifest.json").exists());
    }
}
